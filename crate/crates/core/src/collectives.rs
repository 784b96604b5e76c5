//! Numerically exact Ring-AllReduce over in-memory workers.
//!
//! Scatter-reduce then all-gather over an arbitrary group. Slice s is
//! accumulated in ring order starting from member (s+1) mod m, and the
//! division by m happens once after full accumulation, so results are
//! reproducible and independent of execution schedule.

use std::sync::mpsc;

use crate::config::WorkerId;
use crate::error::{Error, Result};
use crate::vector::ParamVector;

/// Workers participating in one collective, ring order = ascending id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RingGroup {
    members: Vec<WorkerId>,
}

impl RingGroup {
    pub fn new(mut members: Vec<WorkerId>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::EmptyGroup);
        }
        members.sort_unstable();
        if members.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidConfig("duplicate worker in ring group".into()));
        }
        Ok(Self { members })
    }

    pub fn members(&self) -> &[WorkerId] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Computes the half-open byte/element range of slice `s` out of `m` over a
/// length-`L` buffer: `[floor(sL/m), floor((s+1)L/m))`. Slices tile `[0, L)`.
pub fn slice_bounds(len: usize, m: usize, s: usize) -> Result<(usize, usize)> {
    if s >= m {
        return Err(Error::SliceIndexOutOfRange { s, m });
    }
    Ok((s * len / m, (s + 1) * len / m))
}

/// Per-member handshake count for a group of size m.
pub fn handshakes_for_group(m: usize) -> u64 {
    if m <= 1 {
        0
    } else {
        2 * (m as u64 - 1)
    }
}

fn check_inputs(group: &RingGroup, inputs: &[ParamVector]) -> Result<usize> {
    if inputs.len() != group.len() {
        return Err(Error::LengthMismatch {
            left: inputs.len(),
            right: group.len(),
        });
    }
    let len = inputs[0].len();
    for v in inputs {
        if v.len() != len {
            return Err(Error::LengthMismatch {
                left: len,
                right: v.len(),
            });
        }
    }
    Ok(len)
}

/// Lockstep ring allreduce: every member receives the identical elementwise
/// mean of the inputs. Returns one output per member plus the per-member
/// handshake count 2(m-1).
pub fn ring_allreduce_mean(
    group: &RingGroup,
    inputs: &[ParamVector],
) -> Result<(Vec<ParamVector>, u64)> {
    let len = check_inputs(group, inputs)?;
    let m = group.len();
    if m == 1 {
        return Ok((vec![inputs[0].clone()], 0));
    }
    let mut reduced = vec![0.0f64; len];
    for s in 0..m {
        let (lo, hi) = slice_bounds(len, m, s)?;
        for j in lo..hi {
            // Ring accumulation order for slice s: (s+1), (s+2), ..., s.
            let mut acc = inputs[(s + 1) % m].as_slice()[j];
            for step in 2..=m {
                acc += inputs[(s + step) % m].as_slice()[j];
            }
            reduced[j] = acc / m as f64;
        }
    }
    let out = ParamVector::new(reduced)?;
    // All members receive (not recompute) the final slices: byte-identical.
    Ok((vec![out; m], handshakes_for_group(m)))
}

/// One execution context per worker exchanging slices over FIFO channels.
/// The protocol result is schedule-independent: each worker only awaits its
/// predecessor's message for the current step, and the accumulation chain
/// per slice matches the lockstep implementation exactly.
pub fn ring_allreduce_mean_threaded(
    group: &RingGroup,
    inputs: &[ParamVector],
) -> Result<(Vec<ParamVector>, u64)> {
    let len = check_inputs(group, inputs)?;
    let m = group.len();
    if m == 1 {
        return Ok((vec![inputs[0].clone()], 0));
    }

    let mut senders = Vec::with_capacity(m);
    let mut receivers = Vec::with_capacity(m);
    for _ in 0..m {
        let (tx, rx) = mpsc::channel::<Vec<f64>>();
        senders.push(Some(tx));
        receivers.push(Some(rx));
    }
    // Worker i sends into channel (i+1) mod m and receives from channel i.
    let mut ring_tx: Vec<mpsc::Sender<Vec<f64>>> = Vec::with_capacity(m);
    for i in 0..m {
        ring_tx.push(senders[(i + 1) % m].take().unwrap());
    }

    let mut outputs: Vec<Option<ParamVector>> = (0..m).map(|_| None).collect();
    std::thread::scope(|scope| -> Result<()> {
        let mut handles = Vec::with_capacity(m);
        for (i, rx) in receivers.iter_mut().enumerate() {
            let rx = rx.take().unwrap();
            let tx = ring_tx[i].clone();
            let mine = inputs[i].clone();
            handles.push(scope.spawn(move || -> Result<Vec<f64>> {
                let mut buf = mine.into_inner();
                let wrap = |x: isize| -> usize { x.rem_euclid(m as isize) as usize };
                // Scatter-reduce: at round r send slice (i-1-r), receive and
                // accumulate slice (i-2-r).
                for r in 0..m - 1 {
                    let send_s = wrap(i as isize - 1 - r as isize);
                    let (lo, hi) = slice_bounds(len, m, send_s)?;
                    tx.send(buf[lo..hi].to_vec())
                        .map_err(|_| Error::InvalidConfig("ring peer hung up".into()))?;
                    let recv_s = wrap(i as isize - 2 - r as isize);
                    let (lo, hi) = slice_bounds(len, m, recv_s)?;
                    let incoming = rx
                        .recv()
                        .map_err(|_| Error::InvalidConfig("ring peer hung up".into()))?;
                    for (dst, src) in buf[lo..hi].iter_mut().zip(&incoming) {
                        // Incoming partial sum comes first in the chain.
                        *dst = *src + *dst;
                    }
                }
                // Member i now owns fully accumulated slice i; divide once.
                let (lo, hi) = slice_bounds(len, m, i)?;
                for v in buf[lo..hi].iter_mut() {
                    *v /= m as f64;
                }
                // All-gather: at round r send slice (i-r), receive (i-1-r).
                for r in 0..m - 1 {
                    let send_s = wrap(i as isize - r as isize);
                    let (lo, hi) = slice_bounds(len, m, send_s)?;
                    tx.send(buf[lo..hi].to_vec())
                        .map_err(|_| Error::InvalidConfig("ring peer hung up".into()))?;
                    let recv_s = wrap(i as isize - 1 - r as isize);
                    let (lo, hi) = slice_bounds(len, m, recv_s)?;
                    let incoming = rx
                        .recv()
                        .map_err(|_| Error::InvalidConfig("ring peer hung up".into()))?;
                    buf[lo..hi].copy_from_slice(&incoming);
                }
                Ok(buf)
            }));
        }
        for (i, handle) in handles.into_iter().enumerate() {
            let buf = handle
                .join()
                .map_err(|_| Error::InvalidConfig("ring worker panicked".into()))??;
            outputs[i] = Some(ParamVector::new(buf)?);
        }
        Ok(())
    })?;

    Ok((
        outputs.into_iter().map(|o| o.unwrap()).collect(),
        handshakes_for_group(m),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng64;
    use crate::vector::sequential_mean;
    use proptest::prelude::*;

    fn group_of(m: usize) -> RingGroup {
        RingGroup::new((0..m).map(WorkerId).collect()).unwrap()
    }

    fn random_inputs(m: usize, len: usize, seed: u64) -> Vec<ParamVector> {
        let mut rng = Rng64::new(seed);
        (0..m)
            .map(|_| {
                ParamVector::new((0..len).map(|_| rng.next_gaussian()).collect()).unwrap()
            })
            .collect()
    }

    #[test]
    fn slice_bounds_examples() {
        assert_eq!(slice_bounds(10, 2, 0).unwrap(), (0, 5));
        assert_eq!(slice_bounds(10, 2, 1).unwrap(), (5, 10));
        assert_eq!(slice_bounds(37, 4, 0).unwrap(), (0, 9));
        assert_eq!(slice_bounds(37, 4, 1).unwrap(), (9, 18));
        assert_eq!(slice_bounds(37, 4, 2).unwrap(), (18, 27));
        assert_eq!(slice_bounds(37, 4, 3).unwrap(), (27, 37));
        // Degenerate: more slices than elements yields empty slices.
        let sizes: Vec<usize> = (0..4)
            .map(|s| {
                let (lo, hi) = slice_bounds(3, 4, s).unwrap();
                hi - lo
            })
            .collect();
        assert_eq!(sizes.iter().sum::<usize>(), 3);
        assert!(sizes.contains(&0));
        assert!(slice_bounds(10, 4, 4).is_err());
    }

    #[test]
    fn singleton_group_is_identity() {
        let inputs = random_inputs(1, 8, 3);
        let (out, hs) = ring_allreduce_mean(&group_of(1), &inputs).unwrap();
        assert_eq!(out[0], inputs[0]);
        assert_eq!(hs, 0);
    }

    #[test]
    fn three_member_mean_and_handshakes() {
        let inputs = vec![
            ParamVector::new(vec![1.0, 1.0]).unwrap(),
            ParamVector::new(vec![2.0, 2.0]).unwrap(),
            ParamVector::new(vec![3.0, 3.0]).unwrap(),
        ];
        let (out, hs) = ring_allreduce_mean(&group_of(3), &inputs).unwrap();
        assert_eq!(hs, 4);
        for o in &out {
            assert_eq!(o.as_slice(), &[2.0, 2.0]);
        }
    }

    #[test]
    fn non_divisible_length_matches_oracle() {
        let inputs = random_inputs(4, 37, 11);
        let (out, _) = ring_allreduce_mean(&group_of(4), &inputs).unwrap();
        let refs: Vec<&ParamVector> = inputs.iter().collect();
        let want = sequential_mean(&refs).unwrap();
        for (a, b) in out[0].as_slice().iter().zip(want.as_slice()) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn members_receive_byte_identical_outputs() {
        let inputs = random_inputs(7, 101, 5);
        let (out, _) = ring_allreduce_mean(&group_of(7), &inputs).unwrap();
        for o in &out[1..] {
            assert_eq!(o, &out[0]);
        }
    }

    #[test]
    fn threaded_mode_matches_lockstep_bit_for_bit() {
        for (m, len, seed) in [(2usize, 16usize, 1u64), (3, 37, 2), (8, 100, 3), (5, 3, 4)] {
            let inputs = random_inputs(m, len, seed);
            let g = group_of(m);
            let (lockstep, hs_a) = ring_allreduce_mean(&g, &inputs).unwrap();
            let (threaded, hs_b) = ring_allreduce_mean_threaded(&g, &inputs).unwrap();
            assert_eq!(hs_a, hs_b);
            for (a, b) in lockstep.iter().zip(&threaded) {
                assert_eq!(a, b, "m={m} len={len}");
            }
        }
    }

    #[test]
    fn mismatched_lengths_rejected() {
        let inputs = vec![ParamVector::zeros(3), ParamVector::zeros(4)];
        assert!(ring_allreduce_mean(&group_of(2), &inputs).is_err());
    }

    #[test]
    fn empty_group_rejected() {
        assert!(RingGroup::new(vec![]).is_err());
    }

    proptest! {
        #[test]
        fn slices_tile_without_gaps(len in 0usize..5000, m in 1usize..64) {
            let mut covered = 0usize;
            for s in 0..m {
                let (lo, hi) = slice_bounds(len, m, s).unwrap();
                prop_assert_eq!(lo, covered);
                prop_assert!(hi >= lo);
                covered = hi;
            }
            prop_assert_eq!(covered, len);
        }

        #[test]
        fn allreduce_matches_sequential_mean(
            m in 1usize..9,
            len in 1usize..200,
            seed in any::<u64>(),
        ) {
            let inputs = random_inputs(m, len, seed);
            let (out, hs) = ring_allreduce_mean(&group_of(m), &inputs).unwrap();
            prop_assert_eq!(hs, handshakes_for_group(m));
            let refs: Vec<&ParamVector> = inputs.iter().collect();
            let want = sequential_mean(&refs).unwrap();
            for (a, b) in out[0].as_slice().iter().zip(want.as_slice()) {
                prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
            }
        }
    }
}
