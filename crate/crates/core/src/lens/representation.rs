use crate::error::{Error, Result};

/// Number of d-sized blocks in a representation.
pub const BLOCKS: usize = 6;

/// `[s; r; s*c; s*r; |s-c|; |s-r|]`, each block of the encoder dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Representation {
    dim: usize,
    values: Vec<f64>,
}

impl Representation {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Block `i` in 0..6.
    pub fn block(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }
}

pub fn build_representation(c: &[f64], s: &[f64], r: &[f64]) -> Result<Representation> {
    let dim = s.len();
    for v in [c, r] {
        if v.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: v.len() });
        }
    }
    let mut values = Vec::with_capacity(BLOCKS * dim);
    values.extend_from_slice(s);
    values.extend_from_slice(r);
    values.extend(s.iter().zip(c).map(|(a, b)| a * b));
    values.extend(s.iter().zip(r).map(|(a, b)| a * b));
    values.extend(s.iter().zip(c).map(|(a, b)| (a - b).abs()));
    values.extend(s.iter().zip(r).map(|(a, b)| (a - b).abs()));
    Ok(Representation { dim, values })
}

/// Routes dL/dH back to the three encoded vectors, adding into `dc`, `ds`, `dr`.
/// The absolute value contributes a zero subgradient at zero.
pub(crate) fn backprop_representation(
    c: &[f64],
    s: &[f64],
    r: &[f64],
    grad: &[f64],
    dc: &mut [f64],
    ds: &mut [f64],
    dr: &mut [f64],
) {
    let d = s.len();
    let block = |i: usize| &grad[i * d..(i + 1) * d];
    let sign = |x: f64| if x > 0.0 { 1.0 } else if x < 0.0 { -1.0 } else { 0.0 };
    let (g_s, g_r, g_sc, g_sr, g_asc, g_asr) = (block(0), block(1), block(2), block(3), block(4), block(5));
    for j in 0..d {
        let sc = sign(s[j] - c[j]);
        let sr = sign(s[j] - r[j]);
        ds[j] += g_s[j] + g_sc[j] * c[j] + g_sr[j] * r[j] + g_asc[j] * sc + g_asr[j] * sr;
        dr[j] += g_r[j] + g_sr[j] * s[j] - g_asr[j] * sr;
        dc[j] += g_sc[j] * s[j] - g_asc[j] * sc;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_vectors() {
        let h = build_representation(&[1.0], &[1.0], &[1.0]).unwrap();
        assert_eq!(h.values(), &[1.0, 1.0, 1.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn hand_evaluated_blocks() {
        let h = build_representation(&[0.0], &[2.0], &[1.0]).unwrap();
        assert_eq!(h.values(), &[2.0, 1.0, 0.0, 2.0, 2.0, 1.0]);
    }

    #[test]
    fn zero_output_vector() {
        let (x, y) = (-3.5, 0.25);
        let h = build_representation(&[x], &[0.0], &[y]).unwrap();
        assert_eq!(h.values(), &[0.0, y, 0.0, 0.0, x.abs(), y.abs()]);
    }

    #[test]
    fn layout_and_nonnegative_tail() {
        let c = [0.5, -1.0, 2.0, 0.0];
        let s = [1.0, 1.0, -1.0, 3.0];
        let r = [-2.0, 0.0, 1.0, 3.0];
        let h = build_representation(&c, &s, &r).unwrap();
        assert_eq!(h.values().len(), 24);
        assert_eq!(h.block(0), &s);
        assert_eq!(h.block(1), &r);
        assert!(h.block(4).iter().chain(h.block(5)).all(|&v| v >= 0.0));
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(
            build_representation(&[1.0, 2.0], &[1.0], &[1.0]),
            Err(Error::DimensionMismatch { expected: 1, found: 2 })
        ));
    }
}
