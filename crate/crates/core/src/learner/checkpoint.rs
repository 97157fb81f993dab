//! Binary checkpoint of a [`ModelState`].
//!
//! Layout, all little-endian: magic `ALSGCKP1`; `u32` inputs, hidden, classes;
//! `u8` label mode (0 single, 1 multi); `u64` parameter count N; N `f64`
//! parameters; N `f64` first moments; N `f64` second moments; `u64` step;
//! generator seed (32 bytes), `u64` stream, `u128` word position.

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::{param_count, ModelState};
use super::LearnerError;
use crate::volume::LabelMode;

const MAGIC: &[u8; 8] = b"ALSGCKP1";

impl ModelState {
    pub fn to_checkpoint_bytes(&self) -> Vec<u8> {
        let n = self.params.len();
        let mut out = Vec::with_capacity(8 + 13 + 8 + 24 * n + 8 + 32 + 8 + 16);
        out.extend_from_slice(MAGIC);
        for v in [self.inputs, self.hidden, self.classes] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
        out.push(match self.mode {
            LabelMode::SingleLabel => 0,
            LabelMode::MultiLabel => 1,
        });
        out.extend_from_slice(&(n as u64).to_le_bytes());
        for v in self
            .params
            .iter()
            .chain(&self.first_moment)
            .chain(&self.second_moment)
        {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&self.step.to_le_bytes());
        out.extend_from_slice(&self.rng.get_seed());
        out.extend_from_slice(&self.rng.get_stream().to_le_bytes());
        out.extend_from_slice(&self.rng.get_word_pos().to_le_bytes());
        out
    }

    pub fn from_checkpoint_bytes(bytes: &[u8]) -> Result<ModelState, LearnerError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(LearnerError::Checkpoint("bad magic".into()));
        }
        let inputs = r.u32()? as usize;
        let hidden = r.u32()? as usize;
        let classes = r.u32()? as usize;
        let mode = match r.take(1)?[0] {
            0 => LabelMode::SingleLabel,
            1 => LabelMode::MultiLabel,
            m => return Err(LearnerError::Checkpoint(format!("unknown label mode {m}"))),
        };
        let n = r.u64()? as usize;
        if n != param_count(inputs, hidden, classes) {
            return Err(LearnerError::Checkpoint(format!(
                "{n} parameters do not fit a {inputs}-{hidden}-{classes} network"
            )));
        }
        let mut vector = || -> Result<Vec<f64>, LearnerError> { (0..n).map(|_| r.f64()).collect() };
        let params = vector()?;
        let first_moment = vector()?;
        let second_moment = vector()?;
        let step = r.u64()?;
        let seed: [u8; 32] = r.take(32)?.try_into().expect("32 bytes");
        let stream = r.u64()?;
        let word_pos = u128::from_le_bytes(r.take(16)?.try_into().expect("16 bytes"));
        if r.pos != bytes.len() {
            return Err(LearnerError::Checkpoint("trailing bytes".into()));
        }
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(stream);
        rng.set_word_pos(word_pos);
        Ok(ModelState {
            inputs,
            hidden,
            classes,
            mode,
            params,
            first_moment,
            second_moment,
            step,
            rng,
        })
    }

    pub fn save_checkpoint(&self, path: &Path) -> Result<(), LearnerError> {
        fs::write(path, self.to_checkpoint_bytes())?;
        Ok(())
    }

    pub fn load_checkpoint(path: &Path) -> Result<ModelState, LearnerError> {
        Self::from_checkpoint_bytes(&fs::read(path)?)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], LearnerError> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(LearnerError::Checkpoint("truncated checkpoint".into()));
        }
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32, LearnerError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, LearnerError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, LearnerError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
