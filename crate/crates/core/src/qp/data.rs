use nalgebra::{DMatrix, DVector};

/// Stage layout of a multiple-shooting OCP.
///
/// Primal order is `(s_0, u_0, s_1, u_1, ..., s_N)`. Equality rows are the
/// initial-state block followed by the `N` shooting gaps. Inequality rows
/// are stacked stage by stage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OcpDims {
    pub n_x: usize,
    pub n_u: usize,
    pub horizon: usize,
    /// Inequality rows per stage, length `horizon + 1`.
    pub n_h: Vec<usize>,
}

impl OcpDims {
    pub fn new(n_x: usize, n_u: usize, horizon: usize, n_h: Vec<usize>) -> Self {
        assert_eq!(n_h.len(), horizon + 1);
        OcpDims { n_x, n_u, horizon, n_h }
    }

    pub fn n_w(&self) -> usize {
        self.horizon * (self.n_x + self.n_u) + self.n_x
    }

    pub fn n_g(&self) -> usize {
        (self.horizon + 1) * self.n_x
    }

    pub fn n_h_total(&self) -> usize {
        self.n_h.iter().sum()
    }

    /// Number of condensed (control) variables.
    pub fn n_controls(&self) -> usize {
        self.horizon * self.n_u
    }

    /// Offset of `s_k` in `w`.
    pub fn state_offset(&self, k: usize) -> usize {
        k * (self.n_x + self.n_u)
    }

    /// Offset of `u_k` in `w`.
    pub fn control_offset(&self, k: usize) -> usize {
        k * (self.n_x + self.n_u) + self.n_x
    }

    /// Width of stage `k` in `w` (`n_x + n_u`, or `n_x` for the terminal stage).
    pub fn stage_width(&self, k: usize) -> usize {
        if k < self.horizon {
            self.n_x + self.n_u
        } else {
            self.n_x
        }
    }

    /// Offset of stage `k` rows in the stacked inequality vector.
    pub fn ineq_offset(&self, k: usize) -> usize {
        self.n_h[..k].iter().sum()
    }

    /// Offset of the multiplier block for gap `k` (`φ_k(s_k,u_k) - s_{k+1}`).
    pub fn gap_offset(&self, k: usize) -> usize {
        (k + 1) * self.n_x
    }
}

/// Matrix part of an OCP-structured QP.
#[derive(Debug, Clone)]
pub struct QpMatrices {
    pub dims: OcpDims,
    /// Hessian block over `(s_k, u_k)` for `k < N`, over `s_N` for `k = N`.
    pub hess: Vec<DMatrix<f64>>,
    /// `∂φ_k/∂s_k`.
    pub dyn_s: Vec<DMatrix<f64>>,
    /// `∂φ_k/∂u_k`.
    pub dyn_u: Vec<DMatrix<f64>>,
    /// Inequality Jacobian blocks w.r.t. `s_k`, `N + 1` entries.
    pub ineq_s: Vec<DMatrix<f64>>,
    /// Inequality Jacobian blocks w.r.t. `u_k`; the terminal entry has no columns.
    pub ineq_u: Vec<DMatrix<f64>>,
}

/// Vector part of an OCP-structured QP.
#[derive(Debug, Clone)]
pub struct QpVectors {
    /// Objective gradient per stage.
    pub grad: Vec<DVector<f64>>,
    /// Equality residual of the initial-state block without the parameter, i.e. `s_0`.
    pub init: DVector<f64>,
    /// Shooting gaps `φ_k(s_k, u_k) - s_{k+1}`.
    pub gaps: Vec<DVector<f64>>,
    /// Inequality residuals `h_k`.
    pub ineq: Vec<DVector<f64>>,
}

/// A full OCP-structured QP linearization.
#[derive(Debug, Clone)]
pub struct OcpQpData {
    pub matrices: QpMatrices,
    pub vectors: QpVectors,
}

impl QpMatrices {
    pub fn dims(&self) -> &OcpDims {
        &self.dims
    }

    /// `∇g(w) λ + ∇h(w) μ`, i.e. `Gᵀλ + Hᵀμ`.
    pub fn jacobian_transpose_product(&self, lambda: &DVector<f64>, mu: &DVector<f64>) -> DVector<f64> {
        let d = &self.dims;
        let (nx, nu) = (d.n_x, d.n_u);
        let mut out = DVector::zeros(d.n_w());
        {
            let mut s0 = out.rows_mut(0, nx);
            s0 += lambda.rows(0, nx);
        }
        for k in 0..d.horizon {
            let pi = lambda.rows(d.gap_offset(k), nx);
            let sk = d.state_offset(k);
            let uk = d.control_offset(k);
            let ts = self.dyn_s[k].tr_mul(&pi);
            let tu = self.dyn_u[k].tr_mul(&pi);
            let mut s = out.rows_mut(sk, nx);
            s += ts;
            let mut u = out.rows_mut(uk, nu);
            u += tu;
            let mut next = out.rows_mut(d.state_offset(k + 1), nx);
            next -= pi;
        }
        for k in 0..=d.horizon {
            let m = d.n_h[k];
            if m == 0 {
                continue;
            }
            let mk = mu.rows(d.ineq_offset(k), m);
            let ts = self.ineq_s[k].tr_mul(&mk);
            let mut s = out.rows_mut(d.state_offset(k), nx);
            s += ts;
            if k < d.horizon {
                let tu = self.ineq_u[k].tr_mul(&mk);
                let mut u = out.rows_mut(d.control_offset(k), nu);
                u += tu;
            }
        }
        out
    }

    /// `(G Δw, H Δw)`.
    pub fn jacobian_product(&self, dw: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let d = &self.dims;
        let (nx, nu) = (d.n_x, d.n_u);
        let mut eq = DVector::zeros(d.n_g());
        eq.rows_mut(0, nx).copy_from(&dw.rows(0, nx));
        for k in 0..d.horizon {
            let s = dw.rows(d.state_offset(k), nx);
            let u = dw.rows(d.control_offset(k), nu);
            let next = dw.rows(d.state_offset(k + 1), nx);
            let v = &self.dyn_s[k] * s + &self.dyn_u[k] * u - next;
            eq.rows_mut(d.gap_offset(k), nx).copy_from(&v);
        }
        let mut ineq = DVector::zeros(d.n_h_total());
        for k in 0..=d.horizon {
            let m = d.n_h[k];
            if m == 0 {
                continue;
            }
            let mut v = &self.ineq_s[k] * dw.rows(d.state_offset(k), nx);
            if k < d.horizon {
                v += &self.ineq_u[k] * dw.rows(d.control_offset(k), nu);
            }
            ineq.rows_mut(d.ineq_offset(k), m).copy_from(&v);
        }
        (eq, ineq)
    }

    /// Block-diagonal Hessian times `Δw`.
    pub fn hessian_product(&self, dw: &DVector<f64>) -> DVector<f64> {
        let d = &self.dims;
        let mut out = DVector::zeros(d.n_w());
        for k in 0..=d.horizon {
            let off = d.state_offset(k);
            let width = d.stage_width(k);
            let v = &self.hess[k] * dw.rows(off, width);
            out.rows_mut(off, width).copy_from(&v);
        }
        out
    }

    pub fn dense_hessian(&self) -> DMatrix<f64> {
        let d = &self.dims;
        let mut out = DMatrix::zeros(d.n_w(), d.n_w());
        for k in 0..=d.horizon {
            let off = d.state_offset(k);
            let width = d.stage_width(k);
            out.view_mut((off, off), (width, width)).copy_from(&self.hess[k]);
        }
        out
    }

    /// `G = ∇g(w)ᵀ`, `n_g × n_w`.
    pub fn dense_equality_jacobian(&self) -> DMatrix<f64> {
        let d = &self.dims;
        let (nx, nu) = (d.n_x, d.n_u);
        let mut out = DMatrix::zeros(d.n_g(), d.n_w());
        out.view_mut((0, 0), (nx, nx)).fill_with_identity();
        for k in 0..d.horizon {
            let row = d.gap_offset(k);
            out.view_mut((row, d.state_offset(k)), (nx, nx))
                .copy_from(&self.dyn_s[k]);
            out.view_mut((row, d.control_offset(k)), (nx, nu))
                .copy_from(&self.dyn_u[k]);
            let mut next = out.view_mut((row, d.state_offset(k + 1)), (nx, nx));
            next.fill_with_identity();
            next.neg_mut();
        }
        out
    }

    /// `H = ∇h(w)ᵀ`, `n_h × n_w`.
    pub fn dense_inequality_jacobian(&self) -> DMatrix<f64> {
        let d = &self.dims;
        let (nx, nu) = (d.n_x, d.n_u);
        let mut out = DMatrix::zeros(d.n_h_total(), d.n_w());
        for k in 0..=d.horizon {
            let m = d.n_h[k];
            if m == 0 {
                continue;
            }
            let row = d.ineq_offset(k);
            out.view_mut((row, d.state_offset(k)), (m, nx))
                .copy_from(&self.ineq_s[k]);
            if k < d.horizon {
                out.view_mut((row, d.control_offset(k)), (m, nu))
                    .copy_from(&self.ineq_u[k]);
            }
        }
        out
    }
}

impl QpVectors {
    pub fn gradient_full(&self, dims: &OcpDims) -> DVector<f64> {
        let mut out = DVector::zeros(dims.n_w());
        for k in 0..=dims.horizon {
            out.rows_mut(dims.state_offset(k), dims.stage_width(k))
                .copy_from(&self.grad[k]);
        }
        out
    }

    /// Splits a full-space gradient into stage blocks.
    pub fn split_gradient(dims: &OcpDims, full: &DVector<f64>) -> Vec<DVector<f64>> {
        (0..=dims.horizon)
            .map(|k| full.rows(dims.state_offset(k), dims.stage_width(k)).into_owned())
            .collect()
    }

    /// `g(w) + Mx`.
    pub fn equality_full(&self, dims: &OcpDims, x: &DVector<f64>) -> DVector<f64> {
        let nx = dims.n_x;
        let mut out = DVector::zeros(dims.n_g());
        out.rows_mut(0, nx).copy_from(&(&self.init - x));
        for (k, gap) in self.gaps.iter().enumerate() {
            out.rows_mut(dims.gap_offset(k), nx).copy_from(gap);
        }
        out
    }

    pub fn inequality_full(&self, dims: &OcpDims) -> DVector<f64> {
        let mut out = DVector::zeros(dims.n_h_total());
        for (k, h) in self.ineq.iter().enumerate() {
            out.rows_mut(dims.ineq_offset(k), h.len()).copy_from(h);
        }
        out
    }
}
