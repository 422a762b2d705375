//! Weighted pool-adjacent-violators for nonincreasing fits.

/// Weighted least-squares projection of `y` onto nonincreasing sequences.
pub fn isotonic_nonincreasing(y: &[f64], w: &[f64]) -> Vec<f64> {
    assert_eq!(y.len(), w.len());
    // blocks: (weighted mean, total weight, length)
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(y.len());
    for (&yi, &wi) in y.iter().zip(w) {
        let mut cur = (yi, wi, 1usize);
        while let Some(&(m, wt, len)) = blocks.last() {
            if m >= cur.0 {
                break;
            }
            blocks.pop();
            let tw = wt + cur.1;
            cur = ((m * wt + cur.0 * cur.1) / tw, tw, len + cur.2);
        }
        blocks.push(cur);
    }
    let mut out = Vec::with_capacity(y.len());
    for (m, _, len) in blocks {
        out.extend(std::iter::repeat(m).take(len));
    }
    out
}
