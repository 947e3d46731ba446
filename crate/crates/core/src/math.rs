//! Small numeric helpers shared by the learners.

/// Probability floor/ceiling applied before taking logs in cross-entropy.
pub const EPS_CLIP: f64 = 1e-7;

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `out = M v` for a row-major `rows x cols` matrix.
pub fn matvec(m: &[f64], rows: usize, cols: usize, v: &[f64], out: &mut [f64]) {
    for r in 0..rows {
        out[r] = dot(&m[r * cols..(r + 1) * cols], v);
    }
}

/// `out += M^T v` for a row-major `rows x cols` matrix.
pub fn matvec_t_acc(m: &[f64], rows: usize, cols: usize, v: &[f64], out: &mut [f64]) {
    for r in 0..rows {
        let vr = v[r];
        if vr == 0.0 {
            continue;
        }
        let row = &m[r * cols..(r + 1) * cols];
        for c in 0..cols {
            out[c] += row[c] * vr;
        }
    }
}

/// `g += u v^T` into a row-major `u.len() x v.len()` matrix.
pub fn outer_acc(g: &mut [f64], u: &[f64], v: &[f64]) {
    let cols = v.len();
    for (r, &ur) in u.iter().enumerate() {
        if ur == 0.0 {
            continue;
        }
        let row = &mut g[r * cols..(r + 1) * cols];
        for c in 0..cols {
            row[c] += ur * v[c];
        }
    }
}

/// Binary cross-entropy of a clipped probability and its derivative with
/// respect to the unclipped probability (zero inside the clipped region).
pub fn bce(p: f64, y: f64) -> (f64, f64) {
    let pc = p.clamp(EPS_CLIP, 1.0 - EPS_CLIP);
    let loss = -(y * pc.ln() + (1.0 - y) * (1.0 - pc).ln());
    let dp = if p < EPS_CLIP || p > 1.0 - EPS_CLIP {
        0.0
    } else {
        -y / pc + (1.0 - y) / (1.0 - pc)
    };
    (loss, dp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_is_stable_and_symmetric() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!((sigmoid(1.0) - 0.731_058_578_630_004_9).abs() < 1e-15);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
        assert!((sigmoid(3.0) + sigmoid(-3.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bce_is_bounded_by_clip() {
        let (l, d) = bce(1.0, 1.0);
        assert!(l <= -(1.0 - EPS_CLIP).ln() + 1e-15);
        assert_eq!(d, 0.0);
        assert!((bce(0.5, 1.0).0 - std::f64::consts::LN_2).abs() < 1e-15);
    }
}
