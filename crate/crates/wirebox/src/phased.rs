//! Sampling discrete behaviors over real intervals. A window of rational
//! length `ell` placed with phase `r` in `[0, 1)` over integer time sees a
//! path of `ceil(r + ell)` edges; moving or shrinking the window is exact
//! rational arithmetic, never floating point.

use crate::graph::{paths, restrict_section, Graph, GraphError, Section};
use num_rational::Rational64;
use num_traits::{Signed, Zero};

/// A sampled behavior: the carrier path plus where the real window sits.
/// `phase` is the offset of the window start behind the previous integer
/// tick, so the window covers `[0, ell]` shifted by `phase` into the path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhasedSection {
    pub phase: Rational64,
    pub ell: Rational64,
    pub path: Section,
}

fn ceil_usize(q: Rational64) -> usize {
    q.ceil().to_integer() as usize
}

fn floor_usize(q: Rational64) -> usize {
    q.floor().to_integer() as usize
}

/// Number of edges a window of length `ell` at phase `r` spans.
pub fn sample_length(phase: Rational64, ell: Rational64) -> usize {
    ceil_usize(phase + ell)
}

/// All sections of length `ell` at phase `r`: the paths of `g` with
/// `ceil(r + ell)` edges. Requires `0 <= r < 1` and `ell >= 0`.
pub fn sections_at(g: &Graph, phase: Rational64, ell: Rational64) -> Result<Vec<PhasedSection>, GraphError> {
    check_phase(phase)?;
    if ell.is_negative() {
        return Err(GraphError::OutOfRange { what: "window length" });
    }
    let n = sample_length(phase, ell);
    Ok(paths(g, n)
        .into_iter()
        .map(|path| PhasedSection { phase, ell, path })
        .collect())
}

fn check_phase(phase: Rational64) -> Result<(), GraphError> {
    if phase.is_negative() || phase >= Rational64::from_integer(1) {
        return Err(GraphError::OutOfRange { what: "phase" });
    }
    Ok(())
}

impl PhasedSection {
    pub fn validate(&self, g: &Graph) -> Result<(), GraphError> {
        check_phase(self.phase)?;
        if self.ell.is_negative() {
            return Err(GraphError::OutOfRange { what: "window length" });
        }
        if self.path.len() != sample_length(self.phase, self.ell) {
            return Err(GraphError::OutOfRange { what: "carrier path length" });
        }
        self.path.validate(g)
    }

    /// Restriction to the subwindow `[p, p + ell']`. The new window starts
    /// at absolute offset `p + phase`; the carrier subpath runs from tick
    /// `floor(p + phase)` to tick `ceil(p + phase + ell')`.
    pub fn restrict_at(&self, p: Rational64, ell_new: Rational64) -> Result<PhasedSection, GraphError> {
        if p.is_negative() || ell_new.is_negative() || p + ell_new > self.ell {
            return Err(GraphError::OutOfRange { what: "restriction window" });
        }
        let a = floor_usize(p + self.phase);
        let b = ceil_usize(p + self.phase + ell_new);
        let phase = p + self.phase - Rational64::from_integer(a as i64);
        // b <= path length: p + ell' <= ell gives b <= ceil(phase + ell).
        let path = restrict_section(&self.path, a, b.max(a) - a)?;
        let out = PhasedSection { phase, ell: ell_new, path };
        debug_assert!(!out.phase.is_negative() && out.phase < Rational64::from_integer(1));
        debug_assert_eq!(out.path.len(), sample_length(out.phase, out.ell));
        Ok(out)
    }

    /// Zero-length windows at integer offsets see a node; everywhere else a
    /// point sample still sees the edge it sits inside.
    pub fn is_node_sample(&self) -> bool {
        self.ell.is_zero() && self.phase.is_zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::complete;

    fn q(n: i64, d: i64) -> Rational64 {
        Rational64::new(n, d)
    }

    #[test]
    fn window_of_footnote_size_needs_six_edges() {
        // phase 2/3, total reach 2/3 + 29/6 = 11/2, so six edges.
        assert_eq!(sample_length(q(2, 3), q(29, 6)), 6);
    }

    #[test]
    fn integer_windows_match_plain_paths() {
        let g = complete(&["a", "b"]);
        for n in 0..4i64 {
            let secs = sections_at(&g, q(0, 1), q(n, 1)).unwrap();
            assert_eq!(secs.len(), paths(&g, n as usize).len());
        }
    }

    #[test]
    fn point_sample_inside_an_edge_sees_that_edge() {
        let g = complete(&["a", "b"]);
        let secs = sections_at(&g, q(1, 2), q(0, 1)).unwrap();
        for s in &secs {
            assert_eq!(s.path.len(), 1);
        }
        assert_eq!(secs.len(), 4);
    }

    #[test]
    fn restriction_is_functorial() {
        let g = complete(&["a", "b"]);
        let ell = q(7, 2);
        for sec in sections_at(&g, q(1, 3), ell).unwrap() {
            let p1 = q(5, 6);
            let ell1 = q(2, 1);
            let p2 = q(1, 2);
            let ell2 = q(3, 4);
            let once = sec
                .restrict_at(p1, ell1)
                .unwrap()
                .restrict_at(p2, ell2)
                .unwrap();
            let direct = sec.restrict_at(p1 + p2, ell2).unwrap();
            assert_eq!(once, direct);
        }
    }

    #[test]
    fn full_restriction_is_identity() {
        let g = complete(&["a", "b"]);
        for sec in sections_at(&g, q(1, 4), q(3, 2)).unwrap() {
            assert_eq!(sec.restrict_at(q(0, 1), sec.ell).unwrap(), sec);
        }
    }
}
