use crate::error::{Result, SrprError};

/// In-place orthonormal Walsh–Hadamard transform (Sylvester ordering).
///
/// The normalized matrix is symmetric and orthogonal, so the transform is its
/// own inverse.
pub fn fwht_in_place(x: &mut [f64]) -> Result<()> {
    let n = x.len();
    if !n.is_power_of_two() {
        return Err(SrprError::NotPowerOfTwo(n));
    }
    let mut h = 1;
    while h < n {
        for chunk in x.chunks_exact_mut(2 * h) {
            let (lo, hi) = chunk.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (u, v) = (*a, *b);
                *a = u + v;
                *b = u - v;
            }
        }
        h *= 2;
    }
    let s = 1.0 / (n as f64).sqrt();
    x.iter_mut().for_each(|v| *v *= s);
    Ok(())
}

pub fn fwht_normalized(x: &[f64]) -> Result<Vec<f64>> {
    let mut y = x.to_vec();
    fwht_in_place(&mut y)?;
    Ok(y)
}
