use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufWriter};
use std::path::Path;

use crate::checkpoint;
use crate::error::{CheckpointError, TensorError};
use crate::tensor::Tensor;

/// `[T × n_mels]` frames plus one stop flag per frame.
#[derive(Clone, Debug, PartialEq)]
pub struct MelSpectrogram {
    pub frames: Tensor,
    pub stop: Vec<bool>,
}

impl MelSpectrogram {
    /// A training target: stop flag set on the final frame only.
    pub fn target(frames: Tensor) -> Self {
        let t = frames.rows();
        let mut stop = vec![false; t];
        stop[t - 1] = true;
        Self { frames, stop }
    }

    pub fn num_frames(&self) -> usize {
        self.frames.rows()
    }

    pub fn n_mels(&self) -> usize {
        self.frames.cols()
    }

    /// Frames zero-padded to a multiple of `r`, with 0/1 stop targets
    /// (1 only at the last real frame).
    pub fn padded(&self, r: usize) -> (Tensor, Tensor) {
        let t = self.num_frames();
        let n = self.n_mels();
        let padded_len = t.div_ceil(r) * r;
        let mut data = self.frames.data().to_vec();
        data.resize(padded_len * n, 0.0);
        let frames = Tensor::matrix(padded_len, n, data).expect("padding keeps shape");
        let mut stop = vec![0.0; padded_len];
        if let Some(last) = self.stop.iter().rposition(|&s| s) {
            stop[last] = 1.0;
        }
        (frames, Tensor::vector(stop))
    }

    /// Mean absolute difference per entry after zero-padding the shorter
    /// spectrogram to the longer one.
    pub fn l1_distance(&self, other: &MelSpectrogram) -> f64 {
        let n = self.n_mels().max(other.n_mels());
        let t = self.num_frames().max(other.num_frames());
        let at = |m: &MelSpectrogram, i: usize, j: usize| {
            if i < m.num_frames() && j < m.n_mels() {
                m.frames.get(i, j)
            } else {
                0.0
            }
        };
        let mut total = 0.0;
        for i in 0..t {
            for j in 0..n {
                total += (at(self, i, j) - at(other, i, j)).abs();
            }
        }
        total / (t * n) as f64
    }

    /// One frame per line, `n_mels` comma-separated values.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.num_frames() {
            let row: Vec<String> = self.frames.row(i).iter().map(|x| format!("{x}")).collect();
            writeln!(out, "{}", row.join(",")).unwrap();
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, TensorError> {
        let rows = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                l.split(',')
                    .map(|v| v.trim().parse::<f64>().unwrap_or(f64::NAN))
                    .collect::<Vec<_>>()
            })
            .collect::<Vec<_>>();
        Ok(Self::target(Tensor::from_rows(&rows)?))
    }

    pub fn write_binary(&self, w: impl io::Write) -> io::Result<()> {
        let stop = Tensor::vector(self.stop.iter().map(|&s| f64::from(u8::from(s))).collect());
        checkpoint::write_tensors(w, [("frames", &self.frames), ("stop", &stop)])
    }

    pub fn read_binary(r: impl io::Read) -> Result<Self, CheckpointError> {
        let tensors = checkpoint::read_tensors(r)?;
        let get = |name: &str| {
            tensors
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, t)| t.clone())
                .ok_or_else(|| CheckpointError::Corrupt(format!("missing tensor `{name}`")))
        };
        let frames = get("frames")?;
        let stop = get("stop")?.data().iter().map(|&x| x != 0.0).collect::<Vec<_>>();
        if stop.len() != frames.rows() {
            return Err(CheckpointError::Corrupt("stop length differs from frame count".into()));
        }
        Ok(Self { frames, stop })
    }

    /// Writes `<stem>.csv` and `<stem>.bin`.
    pub fn save(&self, stem: &Path) -> io::Result<()> {
        fs::write(stem.with_extension("csv"), self.to_csv())?;
        let f = BufWriter::new(fs::File::create(stem.with_extension("bin"))?);
        self.write_binary(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> MelSpectrogram {
        MelSpectrogram::target(Tensor::matrix(3, 2, vec![0.0, 1.0, 0.25, 0.5, 1.0, 0.0]).unwrap())
    }

    #[test]
    fn padding_to_reduction_factor() {
        let (frames, stop) = sample().padded(2);
        assert_eq!(frames.shape(), &[4, 2]);
        assert_eq!(&frames.data()[6..], &[0.0, 0.0]);
        assert_eq!(stop.data(), &[0.0, 0.0, 1.0, 0.0]);
        let (frames, _) = sample().padded(1);
        assert_eq!(frames.rows(), 3);
    }

    #[test]
    fn csv_and_binary_roundtrip() {
        let m = sample();
        assert_eq!(MelSpectrogram::from_csv(&m.to_csv()).unwrap(), m);
        let mut buf = Vec::new();
        m.write_binary(&mut buf).unwrap();
        assert_eq!(MelSpectrogram::read_binary(&buf[..]).unwrap(), m);
    }

    #[test]
    fn l1_pads_shorter() {
        let m = sample();
        assert_eq!(m.l1_distance(&m), 0.0);
        let short = MelSpectrogram::target(Tensor::matrix(1, 2, vec![0.0, 1.0]).unwrap());
        assert!((m.l1_distance(&short) - 1.75 / 6.0).abs() < 1e-15);
    }
}
