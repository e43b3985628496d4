//! Gated recurrent cell with gates stacked reset, update, candidate.

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// y += W[:, col0..col0+x.len()] x with W row-major of width `stride`.
pub(crate) fn matvec_add(w: &[f64], stride: usize, col0: usize, x: &[f64], y: &mut [f64]) {
    let n = x.len();
    for (r, yr) in y.iter_mut().enumerate() {
        let row = &w[r * stride + col0..r * stride + col0 + n];
        *yr += row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
}

/// dx += W[:, col0..]ᵀ dy.
pub(crate) fn matvec_t_add(w: &[f64], stride: usize, col0: usize, dy: &[f64], dx: &mut [f64]) {
    let n = dx.len();
    for (r, &d) in dy.iter().enumerate() {
        if d == 0.0 {
            continue;
        }
        let row = &w[r * stride + col0..r * stride + col0 + n];
        for (o, a) in dx.iter_mut().zip(row) {
            *o += a * d;
        }
    }
}

/// G[:, col0..] += dy xᵀ.
pub(crate) fn outer_add(g: &mut [f64], stride: usize, col0: usize, dy: &[f64], x: &[f64]) {
    let n = x.len();
    for (r, &d) in dy.iter().enumerate() {
        if d == 0.0 {
            continue;
        }
        let row = &mut g[r * stride + col0..r * stride + col0 + n];
        for (o, b) in row.iter_mut().zip(x) {
            *o += d * b;
        }
    }
}

pub(crate) fn add_to(dst: &mut [f64], src: &[f64]) {
    for (a, b) in dst.iter_mut().zip(src) {
        *a += b;
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Step {
    pub h_prev: Vec<f64>,
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub n: Vec<f64>,
    pub ghn: Vec<f64>,
    pub h: Vec<f64>,
}

/// `gi` is the input projection with its bias already added.
pub(crate) fn forward(wh: &[f64], bh: &[f64], gi: &[f64], h_prev: &[f64]) -> Step {
    let hs = h_prev.len();
    let mut gh = bh.to_vec();
    matvec_add(wh, hs, 0, h_prev, &mut gh);
    let mut s = Step {
        h_prev: h_prev.to_vec(),
        r: vec![0.0; hs],
        u: vec![0.0; hs],
        n: vec![0.0; hs],
        ghn: gh[2 * hs..].to_vec(),
        h: vec![0.0; hs],
    };
    for j in 0..hs {
        let r = sigmoid(gi[j] + gh[j]);
        let u = sigmoid(gi[hs + j] + gh[hs + j]);
        let n = (gi[2 * hs + j] + r * gh[2 * hs + j]).tanh();
        s.r[j] = r;
        s.u[j] = u;
        s.n[j] = n;
        s.h[j] = (1.0 - u) * n + u * h_prev[j];
    }
    s
}

/// Writes the gradient w.r.t. `gi` and `h_prev`; accumulates recurrent weight gradients.
pub(crate) fn backward(
    wh: &[f64],
    s: &Step,
    dh: &[f64],
    dwh: &mut [f64],
    dbh: &mut [f64],
    dgi: &mut [f64],
    dh_prev: &mut [f64],
) {
    let hs = dh.len();
    let mut dgh = vec![0.0; 3 * hs];
    for j in 0..hs {
        let (r, u, n) = (s.r[j], s.u[j], s.n[j]);
        let dn = dh[j] * (1.0 - u);
        let du = dh[j] * (s.h_prev[j] - n);
        dh_prev[j] = dh[j] * u;
        let dan = dn * (1.0 - n * n);
        let dar = dan * s.ghn[j] * r * (1.0 - r);
        let dau = du * u * (1.0 - u);
        dgi[j] = dar;
        dgi[hs + j] = dau;
        dgi[2 * hs + j] = dan;
        dgh[j] = dar;
        dgh[hs + j] = dau;
        dgh[2 * hs + j] = dan * r;
    }
    add_to(dbh, &dgh);
    outer_add(dwh, hs, 0, &dgh, &s.h_prev);
    matvec_t_add(wh, hs, 0, &dgh, dh_prev);
}
