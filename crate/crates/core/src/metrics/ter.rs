//! Translation edit rate following tercom as ported by sacreBLEU: greedy
//! block shifts wrapped around a beam-restricted Levenshtein distance.
//! Tokens are whitespace-separated and compared case-sensitively.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::MetricConfig;
use crate::error::{Error, Result};
use crate::text::split_whitespace;

/// Half-width of the band explored around the length-scaled diagonal.
pub const TER_BEAM_WIDTH: i64 = 25;
/// Total shift candidates evaluated per sentence before the search stops.
pub const TER_MAX_SHIFT_CANDIDATES: usize = 1000;

const INF: i64 = 10_000_000_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EditRateBreakdown {
    pub insertions: usize,
    pub deletions: usize,
    pub substitutions: usize,
    pub shifts: usize,
    pub reference_length: usize,
    pub rate: f64,
}

impl EditRateBreakdown {
    pub fn from_counts(
        insertions: usize,
        deletions: usize,
        substitutions: usize,
        shifts: usize,
        reference_length: usize,
    ) -> Self {
        let edits = insertions + deletions + substitutions + shifts;
        let rate = if reference_length == 0 {
            0.0
        } else {
            edits as f64 / reference_length as f64
        };
        EditRateBreakdown {
            insertions,
            deletions,
            substitutions,
            shifts,
            reference_length,
            rate,
        }
    }

    pub fn edits(&self) -> usize {
        self.insertions + self.deletions + self.substitutions + self.shifts
    }

    /// Sums counts and reference lengths; the rate is recomputed from the sums.
    pub fn pooled<'a>(items: impl IntoIterator<Item = &'a EditRateBreakdown>) -> Self {
        let (mut i, mut d, mut s, mut sh, mut len) = (0, 0, 0, 0, 0);
        for b in items {
            i += b.insertions;
            d += b.deletions;
            s += b.substitutions;
            sh += b.shifts;
            len += b.reference_length;
        }
        Self::from_counts(i, d, s, sh, len)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Op {
    Nop,
    Sub,
    Ins,
    Del,
    Undef,
}

struct BeamEditDistance<'a> {
    reference: &'a [&'a str],
}

impl<'a> BeamEditDistance<'a> {
    /// Edit distance from `hyp` to the reference and the operation trace,
    /// where `Del` consumes a hypothesis word and `Ins` a reference word.
    fn distance(&self, hyp: &[&str]) -> (i64, Vec<Op>) {
        let n_ref = self.reference.len();
        let n_hyp = hyp.len();
        let mut dist = vec![vec![(INF, Op::Undef); n_ref + 1]; n_hyp + 1];
        for (j, cell) in dist[0].iter_mut().enumerate() {
            *cell = (j as i64, Op::Ins);
        }

        let length_ratio = if n_hyp > 0 {
            n_ref as f64 / n_hyp as f64
        } else {
            1.0
        };
        let beam = if (TER_BEAM_WIDTH as f64) < length_ratio / 2.0 {
            (length_ratio / 2.0 + TER_BEAM_WIDTH as f64).ceil() as i64
        } else {
            TER_BEAM_WIDTH
        };

        for i in 1..=n_hyp {
            let diag = (i as f64 * length_ratio).floor() as i64;
            let min_j = (diag - beam).max(0) as usize;
            let max_j = if i == n_hyp {
                n_ref + 1
            } else {
                (diag + beam).min(n_ref as i64 + 1).max(0) as usize
            };
            for j in min_j..max_j {
                if j == 0 {
                    dist[i][0] = (dist[i - 1][0].0 + 1, Op::Del);
                    continue;
                }
                let (sub_cost, sub_op) = if hyp[i - 1] == self.reference[j - 1] {
                    (0, Op::Nop)
                } else {
                    (1, Op::Sub)
                };
                // preference order on ties: match/substitution, then
                // deletion, then insertion
                let candidates = [
                    (dist[i - 1][j - 1].0 + sub_cost, sub_op),
                    (dist[i - 1][j].0 + 1, Op::Del),
                    (dist[i][j - 1].0 + 1, Op::Ins),
                ];
                for (cost, op) in candidates {
                    if dist[i][j].0 > cost {
                        dist[i][j] = (cost, op);
                    }
                }
            }
        }

        let mut trace = Vec::with_capacity(n_hyp + n_ref);
        let (mut i, mut j) = (n_hyp, n_ref);
        while i > 0 || j > 0 {
            let op = dist[i][j].1;
            trace.push(op);
            match op {
                Op::Nop | Op::Sub => {
                    i -= 1;
                    j -= 1;
                }
                Op::Ins => j -= 1,
                Op::Del => i -= 1,
                Op::Undef => unreachable!("beam left cell ({i}, {j}) unreached"),
            }
        }
        trace.reverse();
        (dist[n_hyp][n_ref].0, trace)
    }
}

/// Alignment derived from the trace read as rewriting the reference into the
/// hypothesis: reference position -> hypothesis position (or -1), and
/// per-position error flags on both sides.
struct Alignment {
    align: HashMap<usize, i64>,
    ref_err: Vec<u8>,
    hyp_err: Vec<u8>,
}

fn alignment_from_trace(trace: &[Op]) -> Alignment {
    let mut pos_hyp: i64 = -1;
    let mut pos_ref: i64 = -1;
    let mut out = Alignment {
        align: HashMap::new(),
        ref_err: Vec::new(),
        hyp_err: Vec::new(),
    };
    for &op in trace {
        // the flipped view: a hypothesis-consuming step is an insertion
        match op {
            Op::Nop | Op::Sub => {
                let e = u8::from(op == Op::Sub);
                pos_hyp += 1;
                pos_ref += 1;
                out.align.insert(pos_ref as usize, pos_hyp);
                out.hyp_err.push(e);
                out.ref_err.push(e);
            }
            Op::Del => {
                pos_hyp += 1;
                out.hyp_err.push(1);
            }
            Op::Ins => {
                pos_ref += 1;
                out.align.insert(pos_ref as usize, pos_hyp);
                out.ref_err.push(1);
            }
            Op::Undef => unreachable!(),
        }
    }
    out
}

/// Python-style slice with clamping.
fn slice<T>(v: &[T], from: usize, to: usize) -> &[T] {
    let from = from.min(v.len());
    let to = to.min(v.len()).max(from);
    &v[from..to]
}

fn perform_shift<'a>(words: &[&'a str], start: usize, length: usize, target: usize) -> Vec<&'a str> {
    let block = slice(words, start, start + length);
    let parts: [&[&str]; 4] = if target < start {
        [slice(words, 0, target), block, slice(words, target, start), slice(words, start + length, words.len())]
    } else if target > start + length {
        [slice(words, 0, start), slice(words, start + length, target), block, slice(words, target, words.len())]
    } else {
        [
            slice(words, 0, start),
            slice(words, start + length, length + target),
            block,
            slice(words, length + target, words.len()),
        ]
    };
    parts.concat()
}

/// Matching blocks `(hyp start, ref start, length)` in tercom order.
fn shifted_pairs(hyp: &[&str], reference: &[&str], max_size: usize, max_dist: usize) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for start_h in 0..hyp.len() {
        for start_r in 0..reference.len() {
            if start_r.abs_diff(start_h) > max_dist {
                continue;
            }
            let mut length = 0;
            while hyp[start_h + length] == reference[start_r + length] && length < max_size {
                length += 1;
                out.push((start_h, start_r, length));
                if hyp.len() == start_h + length || reference.len() == start_r + length {
                    break;
                }
            }
        }
    }
    out
}

struct ShiftOutcome<'a> {
    gain: i64,
    words: Vec<&'a str>,
}

fn best_shift<'a>(
    hyp: &[&'a str],
    reference: &[&str],
    ed: &BeamEditDistance<'_>,
    checked: &mut usize,
    config: &MetricConfig,
) -> Option<ShiftOutcome<'a>> {
    let (pre_score, trace) = ed.distance(hyp);
    let al = alignment_from_trace(&trace);

    // (gain, length, -start_h, -target), compared lexicographically
    let mut best: Option<((i64, usize, i64, i64), Vec<&'a str>)> = None;
    for (start_h, start_r, length) in
        shifted_pairs(hyp, reference, config.ter_max_shift_size, config.ter_max_shift_distance)
    {
        if al.hyp_err[start_h..start_h + length].iter().all(|&e| e == 0) {
            continue;
        }
        if al.ref_err[start_r..start_r + length].iter().all(|&e| e == 0) {
            continue;
        }
        let aligned = al.align[&start_r];
        if start_h as i64 <= aligned && aligned < (start_h + length) as i64 {
            continue;
        }

        let mut prev_target: i64 = -1;
        for offset in -1..length as i64 {
            let pos = start_r as i64 + offset;
            let target = if pos == -1 {
                0
            } else if let Some(&a) = al.align.get(&(pos as usize)) {
                a + 1
            } else {
                break;
            };
            if target == prev_target {
                continue;
            }
            prev_target = target;

            let shifted = perform_shift(hyp, start_h, length, target as usize);
            let rank = (pre_score - ed.distance(&shifted).0, length, -(start_h as i64), -target);
            *checked += 1;
            if best.as_ref().is_none_or(|(b, _)| rank > *b) {
                best = Some((rank, shifted));
            }
        }
        if *checked >= TER_MAX_SHIFT_CANDIDATES {
            break;
        }
    }
    best.map(|(rank, words)| ShiftOutcome { gain: rank.0, words })
}

/// TER of `hypothesis` against `baseline` (which plays the reference role),
/// with counts per operation class.
pub fn ter_edit_rate(hypothesis: &str, baseline: &str, config: &MetricConfig) -> Result<EditRateBreakdown> {
    let hyp = split_whitespace(hypothesis);
    let reference = split_whitespace(baseline);
    if reference.is_empty() {
        return Err(Error::InvalidArgument(
            "edit rate is undefined for an empty baseline".into(),
        ));
    }
    let ed = BeamEditDistance {
        reference: &reference,
    };

    let mut words = hyp;
    let mut shifts = 0;
    let mut checked = 0;
    loop {
        let Some(outcome) = best_shift(&words, &reference, &ed, &mut checked, config) else {
            break;
        };
        if checked >= TER_MAX_SHIFT_CANDIDATES || outcome.gain <= 0 {
            break;
        }
        shifts += 1;
        words = outcome.words;
    }

    let (_, trace) = ed.distance(&words);
    let count = |op| trace.iter().filter(|&&o| o == op).count();
    Ok(EditRateBreakdown::from_counts(
        count(Op::Ins),
        count(Op::Del),
        count(Op::Sub),
        shifts,
        reference.len(),
    ))
}
