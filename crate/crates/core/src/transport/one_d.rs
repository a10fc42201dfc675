use super::plan::pow_p;

/// `sum |F^-1 - G^-1|^p` over the monotone coupling of two weighted point
/// sets on the line. `ys` weights must already carry the mass of `xs`.
pub(crate) fn quantile_cost(xs: &[(f64, f64)], ys: &[(f64, f64)], p: f64) -> f64 {
    let mut xs = xs.to_vec();
    let mut ys = ys.to_vec();
    xs.sort_by(|a, b| a.0.total_cmp(&b.0));
    ys.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (mut i, mut j) = (0, 0);
    let (mut ra, mut rb) = (xs[0].1, ys[0].1);
    let mut terms = Vec::with_capacity(xs.len() + ys.len());
    while i < xs.len() && j < ys.len() {
        let q = ra.min(rb);
        if q > 0.0 {
            terms.push(q * pow_p((xs[i].0 - ys[j].0).abs(), p));
        }
        ra -= q;
        rb -= q;
        if ra <= 0.0 {
            i += 1;
            if i < xs.len() {
                ra = xs[i].1;
            }
        } else {
            j += 1;
            if j < ys.len() {
                rb = ys[j].1;
            }
        }
    }
    crate::measures::neumaier_sum(terms)
}
