//! MUSCL reconstruction with the minmod limiter, Rusanov fluxes and upwind
//! transport, all on arrays extended by two ghost cells per side.

pub(crate) const GHOSTS: usize = 2;

#[inline]
pub(crate) fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

/// Copies `interior` into a ghost-extended buffer.
pub(crate) enum Ghosts {
    Periodic,
    Constant { left: f64, right: f64 },
}

pub(crate) fn extend(interior: &[f64], ghosts: &Ghosts) -> Vec<f64> {
    let n = interior.len();
    let mut q = vec![0.0; n + 2 * GHOSTS];
    q[GHOSTS..GHOSTS + n].copy_from_slice(interior);
    for g in 0..GHOSTS {
        match ghosts {
            Ghosts::Periodic => {
                q[g] = interior[n - GHOSTS + g];
                q[GHOSTS + n + g] = interior[g];
            }
            Ghosts::Constant { left, right } => {
                q[g] = *left;
                q[GHOSTS + n + g] = *right;
            }
        }
    }
    q
}

/// Limited slopes of an extended array (zero in the outermost ghosts).
pub(crate) fn slopes(q: &[f64]) -> Vec<f64> {
    let m = q.len();
    let mut s = vec![0.0; m];
    for i in 1..m - 1 {
        s[i] = minmod(q[i] - q[i - 1], q[i + 1] - q[i]);
    }
    s
}

/// Left and right states at the `n + 1` interfaces bounding the interior;
/// interface `k` separates interior cells `k - 1` and `k`.
pub(crate) fn interface_states(q: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let s = slopes(q);
    let n = q.len() - 2 * GHOSTS;
    let mut left = Vec::with_capacity(n + 1);
    let mut right = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let a = GHOSTS + k - 1;
        left.push(q[a] + 0.5 * s[a]);
        right.push(q[a + 1] - 0.5 * s[a + 1]);
    }
    (left, right)
}

/// Rusanov fluxes for a conserved `q` whose flux and local wave speed depend
/// on `q` and a companion field `w`.
pub(crate) fn rusanov_fluxes(
    q: &[f64],
    w: &[f64],
    flux: impl Fn(f64, f64) -> f64,
    speed: impl Fn(f64, f64) -> f64,
) -> Vec<f64> {
    let (ql, qr) = interface_states(q);
    let (wl, wr) = interface_states(w);
    (0..ql.len())
        .map(|k| {
            let a = speed(ql[k], wl[k]).abs().max(speed(qr[k], wr[k]).abs());
            0.5 * (flux(ql[k], wl[k]) + flux(qr[k], wr[k])) - 0.5 * a * (qr[k] - ql[k])
        })
        .collect()
}

/// Upwind-biased, limited approximation of `a q_x` for each interior cell.
pub(crate) fn upwind_transport(q: &[f64], a: &[f64], h: f64) -> Vec<f64> {
    let (ql, qr) = interface_states(q);
    a.iter()
        .enumerate()
        .map(|(i, &ai)| {
            if ai > 0.0 {
                ai * (ql[i + 1] - ql[i]) / h
            } else if ai < 0.0 {
                ai * (qr[i + 1] - qr[i]) / h
            } else {
                0.0
            }
        })
        .collect()
}
