use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::GraphError;

/// Reserved symbol shown for the UNK slot.
pub const UNK_SYMBOL: char = '\u{FFFD}';

/// Character → id table. With UNK enabled, id 0 is reserved for unknown
/// characters and real symbols start at 1.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocab {
    symbols: Vec<char>,
    unk: bool,
    #[serde(skip)]
    index: HashMap<char, usize>,
}

impl Vocab {
    pub fn new(symbols: impl IntoIterator<Item = char>, unk: bool) -> Self {
        let uniq: BTreeSet<char> = symbols.into_iter().filter(|c| !c.is_whitespace()).collect();
        let mut all = Vec::with_capacity(uniq.len() + 1);
        if unk {
            all.push(UNK_SYMBOL);
        }
        all.extend(uniq.into_iter().filter(|&c| !(unk && c == UNK_SYMBOL)));
        Self::from_symbols(all, unk)
    }

    /// All non-whitespace characters of `texts`, sorted.
    pub fn from_texts<'a>(texts: impl IntoIterator<Item = &'a str>, unk: bool) -> Self {
        Self::new(texts.into_iter().flat_map(str::chars), unk)
    }

    fn from_symbols(symbols: Vec<char>, unk: bool) -> Self {
        let index = symbols.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        Self { symbols, unk, index }
    }

    /// Rebuilds the lookup index after deserialization.
    pub fn reindexed(self) -> Self {
        Self::from_symbols(self.symbols, self.unk)
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn unk_enabled(&self) -> bool {
        self.unk
    }

    pub fn symbols(&self) -> &[char] {
        &self.symbols
    }

    pub fn symbol(&self, id: usize) -> Option<char> {
        self.symbols.get(id).copied()
    }

    pub fn lookup(&self, c: char) -> Result<usize, GraphError> {
        match self.index.get(&c) {
            Some(&id) => Ok(id),
            None if self.unk => Ok(0),
            None => Err(GraphError::UnknownSymbol(c)),
        }
    }
}
