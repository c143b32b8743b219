//! Small derivative-free search helpers shared by the surrogate and the
//! acquisition optimizer.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section maximization of `f` over `[lo, hi]` with a fixed number of
/// interval reductions. Returns the better of the two final probes.
pub(crate) fn golden_section_max(lo: f64, hi: f64, steps: usize, mut f: impl FnMut(f64) -> f64) -> (f64, f64) {
    if hi - lo <= 0.0 {
        return (lo, f(lo));
    }
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..steps {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}
