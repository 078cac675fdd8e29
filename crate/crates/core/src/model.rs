//! Binary model files.
//!
//! Layout, all integers `u64` and all reals `f64`, little-endian:
//!
//! ```text
//! "CLVQ1"
//! M m V L n dim threshold_factor
//! member_count, then per member:
//!     bootstrap layer learning_rate epochs weight_budget seed trained_epochs
//!     weights_before_prune correct evaluated attempts pool_start pool_len
//! pool_len, then per pooled weight: class, dim reals
//! M confusion sets, each: len, sorted labels
//! M suspicion sets, each: len, sorted labels
//! ```
//!
//! Member networks are stored only once, as contiguous ranges of the pool.

use std::collections::BTreeSet;

use crate::committee::{Member, SystemA};
use crate::config::EnsembleConfig;
use crate::error::{Error, Result};
use crate::fec::{regroup_weights, FecIndex, SystemB};
use crate::lvq::{LvqNetwork, RecognitionStats, TrainParams};

pub const MAGIC: &[u8; 5] = b"CLVQ1";

struct Writer(Vec<u8>);

impl Writer {
    fn u(&mut self, x: usize) {
        self.0.extend_from_slice(&(x as u64).to_le_bytes());
    }

    fn u64(&mut self, x: u64) {
        self.0.extend_from_slice(&x.to_le_bytes());
    }

    fn f(&mut self, x: f64) {
        self.0.extend_from_slice(&x.to_le_bytes());
    }

    fn set(&mut self, s: &BTreeSet<usize>) {
        self.u(s.len());
        for &c in s {
            self.u(c);
        }
    }
}

/// Serializes a trained system.
pub fn encode_model(sys: &SystemB) -> Vec<u8> {
    let committee = sys.committee();
    let config = committee.config();
    let fec = sys.fec();
    let mut w = Writer(MAGIC.to_vec());
    for x in [
        config.classes(),
        config.bootstrap_size(),
        config.overlap(),
        config.layers(),
    ] {
        w.u(x);
    }
    w.u(committee.exemplars_per_class());
    w.u(committee.dim());
    w.f(fec.threshold_factor());

    w.u(committee.members().len());
    let mut start = 0;
    for m in committee.members() {
        w.u(m.bootstrap);
        w.u(m.layer);
        w.f(m.params.learning_rate);
        w.u(m.params.epochs);
        w.u(m.params.weight_budget);
        w.u64(m.params.seed);
        w.u(m.network.trained_epochs());
        w.u(m.weights_before_prune);
        w.u(m.stats.correct);
        w.u(m.stats.evaluated);
        w.u(m.attempts);
        w.u(start);
        w.u(m.network.len());
        start += m.network.len();
    }

    w.u(fec.pool().len());
    for e in fec.pool() {
        w.u(e.class);
        for &x in sys.weight(e) {
            w.f(x);
        }
    }
    for s in fec.confusion_sets() {
        w.set(s);
    }
    for s in fec.suspicion_sets() {
        w.set(s);
    }
    w.0
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

fn malformed(msg: impl Into<String>) -> Error {
    Error::MalformedModel(msg.into())
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| malformed(format!("truncated at byte {}", self.pos)))?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn u(&mut self) -> Result<usize> {
        let x = self.u64()?;
        usize::try_from(x).map_err(|_| malformed(format!("value {x} out of range")))
    }

    fn f(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    /// A count of records of at least `record_bytes` each, checked against
    /// the bytes left so corrupt counts cannot trigger huge allocations.
    fn count(&mut self, record_bytes: usize) -> Result<usize> {
        let n = self.u()?;
        let left = self.buf.len() - self.pos;
        if n.checked_mul(record_bytes).is_none_or(|b| b > left) {
            return Err(malformed(format!("count {n} exceeds remaining {left} bytes")));
        }
        Ok(n)
    }

    fn set(&mut self, classes: usize) -> Result<BTreeSet<usize>> {
        let n = self.count(8)?;
        let mut out = BTreeSet::new();
        let mut prev = None;
        for _ in 0..n {
            let c = self.u()?;
            if c >= classes || prev.is_some_and(|p| p >= c) {
                return Err(malformed("class set is not a sorted list of valid labels"));
            }
            prev = Some(c);
            out.insert(c);
        }
        Ok(out)
    }
}

struct MemberRecord {
    bootstrap: usize,
    layer: usize,
    params: TrainParams,
    trained_epochs: usize,
    weights_before_prune: usize,
    correct: usize,
    evaluated: usize,
    attempts: usize,
    pool_start: usize,
    pool_len: usize,
}

/// Parses a model written by [`encode_model`].
pub fn decode_model(bytes: &[u8]) -> Result<SystemB> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(MAGIC.len()).ok() != Some(&MAGIC[..]) {
        return Err(malformed("missing CLVQ1 magic"));
    }
    let (classes, m, v, l) = (r.u()?, r.u()?, r.u()?, r.u()?);
    let config = EnsembleConfig::derive(classes, m, v, l)?;
    let n = r.u()?;
    let dim = r.u()?;
    if dim == 0 {
        return Err(malformed("dimension is zero"));
    }
    let threshold_factor = r.f()?;

    let member_count = r.count(13 * 8)?;
    let mut records = Vec::with_capacity(member_count);
    for _ in 0..member_count {
        records.push(MemberRecord {
            bootstrap: r.u()?,
            layer: r.u()?,
            params: TrainParams {
                learning_rate: r.f()?,
                epochs: r.u()?,
                weight_budget: r.u()?,
                seed: r.u64()?,
            },
            trained_epochs: r.u()?,
            weights_before_prune: r.u()?,
            correct: r.u()?,
            evaluated: r.u()?,
            attempts: r.u()?,
            pool_start: r.u()?,
            pool_len: r.u()?,
        });
    }

    let pool_len = r.count(8 + 8 * dim)?;
    let mut pool = Vec::with_capacity(pool_len);
    for _ in 0..pool_len {
        let class = r.u()?;
        if class >= classes {
            return Err(malformed(format!("pooled weight labeled {class} of {classes} classes")));
        }
        let w = (0..dim).map(|_| r.f()).collect::<Result<Vec<f64>>>()?;
        pool.push((class, w));
    }

    let mut members = Vec::with_capacity(member_count);
    let mut offset = 0;
    for rec in records {
        if rec.pool_start != offset || rec.pool_len == 0 || offset + rec.pool_len > pool.len() {
            return Err(malformed(format!(
                "member (bootstrap {}, layer {}) has a bad pool range",
                rec.bootstrap, rec.layer
            )));
        }
        let slice = &pool[offset..offset + rec.pool_len];
        offset += rec.pool_len;
        let mut network = LvqNetwork::from_weights(
            slice.iter().map(|(_, w)| w.clone()).collect(),
            slice.iter().map(|&(c, _)| c).collect(),
        )?;
        network.set_trained_epochs(rec.trained_epochs);
        members.push(Member {
            bootstrap: rec.bootstrap,
            layer: rec.layer,
            params: rec.params,
            network,
            weights_before_prune: rec.weights_before_prune,
            stats: RecognitionStats {
                correct: rec.correct,
                evaluated: rec.evaluated,
                rate: rec.correct as f64 / (n * classes) as f64,
                beats_random: rec.correct > n,
            },
            attempts: rec.attempts,
        });
    }
    if offset != pool.len() {
        return Err(malformed("pooled weights not owned by any member"));
    }

    let confusion = (0..classes).map(|_| r.set(classes)).collect::<Result<Vec<_>>>()?;
    let suspicion = (0..classes).map(|_| r.set(classes)).collect::<Result<Vec<_>>>()?;
    if r.pos != bytes.len() {
        return Err(malformed(format!("{} trailing bytes", bytes.len() - r.pos)));
    }

    let committee = SystemA::from_members(config, members, n)?;
    let fec = FecIndex::from_confusion_sets(
        regroup_weights(&committee),
        confusion,
        threshold_factor,
        committee.mean_member_rate(),
        committee.config().classifiers_per_class(),
    )?;
    if fec.suspicion_sets() != suspicion.as_slice() {
        return Err(malformed("suspicion sets disagree with confusion sets"));
    }
    SystemB::new(committee, fec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::committee::CommitteeParams;
    use crate::dataset::{synth_clusters, SynthSpec};
    use crate::experiment::train_system;

    fn trained() -> SystemB {
        let spec: SynthSpec = "synth:M=6,n=6,dim=8,sep=10,noise=1,seed=4".parse().unwrap();
        let split = synth_clusters(&spec).unwrap().dataset.split(0).unwrap();
        let config = EnsembleConfig::derive(6, 3, 0, 2).unwrap();
        train_system(&config, &split.train, 9, &CommitteeParams::default(), 0.75).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let sys = trained();
        let bytes = encode_model(&sys);
        assert!(bytes.starts_with(MAGIC));
        let back = decode_model(&bytes).unwrap();
        assert_eq!(back, sys);
        assert_eq!(encode_model(&back), bytes);
    }

    #[test]
    fn rejects_damage() {
        let bytes = encode_model(&trained());
        assert!(matches!(
            decode_model(&bytes[..bytes.len() - 1]),
            Err(Error::MalformedModel(_))
        ));
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(decode_model(&extra).is_err());
        let mut magic = bytes.clone();
        magic[4] = b'2';
        assert!(decode_model(&magic).is_err());
        assert!(decode_model(b"").is_err());
    }
}
