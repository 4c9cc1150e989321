//! Slow, self-contained reference for the error-bar estimators.
//!
//! Nothing here calls into the library: transforms are direct separable
//! DFT sums, masks are rasterized from line parameters, and the solver is a
//! plain ADMM loop over `Vec`s. Arrays are row-major in natural frequency
//! order (index `k` holds frequency `k` or `k - m`).

use std::f64::consts::TAU;

use rustfft::num_complex::Complex64 as C;

#[derive(Clone, Copy)]
pub enum Line {
    Ray(f64),
    Row(i64),
}

pub struct Grid {
    pub m: usize,
    pub n: usize,
}

impl Grid {
    fn lo_hi(len: usize) -> (i64, i64) {
        let lo = -((len / 2) as i64);
        (lo, lo + len as i64 - 1)
    }

    /// Natural index of frequency `(p, q)`, if on the grid.
    fn slot(&self, p: i64, q: i64) -> Option<usize> {
        let (rlo, rhi) = Self::lo_hi(self.m);
        let (clo, chi) = Self::lo_hi(self.n);
        if p < rlo || p > rhi || q < clo || q > chi {
            return None;
        }
        let k = p.rem_euclid(self.m as i64) as usize;
        let l = q.rem_euclid(self.n as i64) as usize;
        Some(k * self.n + l)
    }

    /// 0/1 sampling weights for a set of lines.
    pub fn mask(&self, lines: &[Line]) -> Vec<f64> {
        let mut out = vec![0.0; self.m * self.n];
        let (clo, chi) = Self::lo_hi(self.n);
        for line in lines {
            match *line {
                Line::Row(p) => {
                    for q in clo..=chi {
                        if let Some(s) = self.slot(p, q) {
                            out[s] = 1.0;
                        }
                    }
                }
                Line::Ray(theta) => {
                    let a = self.m.div_ceil(2) as f64;
                    let b = self.n.div_ceil(2) as f64;
                    let reach = (a * a + b * b).sqrt();
                    let mut t = 0.0;
                    while t <= reach {
                        let p = (t * theta.sin()).round() as i64;
                        let q = (t * theta.cos()).round() as i64;
                        if let Some(s) = self.slot(p, q) {
                            out[s] = 1.0;
                        }
                        t += 0.5;
                    }
                }
            }
        }
        out
    }

    fn twiddles(len: usize, sign: f64) -> Vec<C> {
        (0..len * len)
            .map(|i| {
                let (a, b) = (i / len, i % len);
                C::from_polar(1.0, sign * TAU * ((a * b) % len) as f64 / len as f64)
            })
            .collect()
    }

    /// Unitary DFT, `sign = -1` forward and `+1` inverse, row pass then
    /// column pass.
    pub fn dft(&self, x: &[C], sign: f64) -> Vec<C> {
        let (m, n) = (self.m, self.n);
        let tr = Self::twiddles(n, sign);
        let tc = Self::twiddles(m, sign);
        let mut rows = vec![C::default(); m * n];
        for r in 0..m {
            for l in 0..n {
                let mut acc = C::default();
                for c in 0..n {
                    acc += x[r * n + c] * tr[l * n + c];
                }
                rows[r * n + l] = acc;
            }
        }
        let mut out = vec![C::default(); m * n];
        let scale = 1.0 / ((m * n) as f64).sqrt();
        for k in 0..m {
            for l in 0..n {
                let mut acc = C::default();
                for r in 0..m {
                    acc += rows[r * n + l] * tc[k * m + r];
                }
                out[k * n + l] = acc * scale;
            }
        }
        out
    }

    fn mirror(&self, s: usize) -> usize {
        let (k, l) = (s / self.n, s % self.n);
        ((self.m - k) % self.m) * self.n + (self.n - l) % self.n
    }

    fn grad(&self, u: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (m, n) = (self.m, self.n);
        let mut gx = vec![0.0; m * n];
        let mut gy = vec![0.0; m * n];
        for r in 0..m {
            for c in 0..n {
                gx[r * n + c] = u[r * n + (c + 1) % n] - u[r * n + c];
                gy[r * n + c] = u[((r + 1) % m) * n + c] - u[r * n + c];
            }
        }
        (gx, gy)
    }

    fn div_t(&self, gx: &[f64], gy: &[f64]) -> Vec<f64> {
        let (m, n) = (self.m, self.n);
        let mut out = vec![0.0; m * n];
        for r in 0..m {
            for c in 0..n {
                out[r * n + c] = gx[r * n + (c + n - 1) % n] - gx[r * n + c]
                    + gy[((r + m - 1) % m) * n + c]
                    - gy[r * n + c];
            }
        }
        out
    }

    /// TV-L2 reconstruction of a real image from masked k-space.
    pub fn tv(&self, data: &[C], mask: &[f64], mu: f64, beta: f64, iters: usize) -> Vec<f64> {
        let len = self.m * self.n;
        // Fourier symbol of D'D read off its impulse response.
        let mut impulse = vec![0.0; len];
        impulse[0] = 1.0;
        let (ix, iy) = self.grad(&impulse);
        let kernel: Vec<C> = self
            .div_t(&ix, &iy)
            .iter()
            .map(|&v| C::new(v, 0.0))
            .collect();
        let root = ((self.m * self.n) as f64).sqrt();
        let symbol: Vec<f64> = self
            .dft(&kernel, -1.0)
            .iter()
            .map(|z| z.re * root)
            .collect();

        let py: Vec<C> = (0..len).map(|s| data[s] * mask[s]).collect();
        let p_sym: Vec<f64> = (0..len)
            .map(|s| 0.5 * (mask[s] + mask[self.mirror(s)]))
            .collect();
        let y_sym: Vec<C> = (0..len)
            .map(|s| 0.5 * (py[s] + py[self.mirror(s)].conj()))
            .collect();

        let mut u: Vec<f64> = self.dft(&y_sym, 1.0).iter().map(|z| z.re).collect();
        let mut wx = vec![0.0; len];
        let mut wy = vec![0.0; len];
        let mut lx = vec![0.0; len];
        let mut ly = vec![0.0; len];
        for _ in 0..iters {
            let (gx, gy) = self.grad(&u);
            for s in 0..len {
                let a = gx[s] + lx[s] / beta;
                let b = gy[s] + ly[s] / beta;
                let r = (a * a + b * b).sqrt();
                let keep = if r > 1.0 / beta {
                    (r - 1.0 / beta) / r
                } else {
                    0.0
                };
                wx[s] = keep * a;
                wy[s] = keep * b;
            }
            let sx: Vec<f64> = (0..len).map(|s| wx[s] - lx[s] / beta).collect();
            let sy: Vec<f64> = (0..len).map(|s| wy[s] - ly[s] / beta).collect();
            let rhs: Vec<C> = self
                .div_t(&sx, &sy)
                .iter()
                .map(|&v| C::new(beta * v, 0.0))
                .collect();
            let mut hat = self.dft(&rhs, -1.0);
            for s in 0..len {
                let d = beta * symbol[s] + mu * p_sym[s];
                hat[s] = if d > 0.0 {
                    (hat[s] + y_sym[s] * mu) / d
                } else {
                    C::default()
                };
            }
            u = self.dft(&hat, 1.0).iter().map(|z| z.re).collect();
            let (gx, gy) = self.grad(&u);
            for s in 0..len {
                lx[s] += beta * (gx[s] - wx[s]);
                ly[s] += beta * (gy[s] - wy[s]);
            }
        }
        u
    }
}
