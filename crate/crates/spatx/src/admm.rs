//! Velocity model: minimize `1/2 ||<g, v> + r||^2 + lambda/2 ||grad^n v||^2`
//! with `g` the source gradient and `r = src - tgt`, by ADMM on the split
//! `v = w`.
//!
//! Iteration stops once both the primal residual `||v - w||` and the change
//! in `w` fall below the tolerance relative to `||w||`.
//!
//! The data term and the residual are reflectively padded before solving so
//! the spectral smoother sees no artificial image border; the solution is
//! cropped back afterwards.

use ndarray::{Array2, Zip};
use sua_core::{ensure_same_dims, AdmmConfig, Error, Image, Result, VectorField};

use crate::diff::{central_gradient, crop, nth_gradient, nth_gradient_energy, reflect_pad, Partial};
use crate::spectral::{laplacian_eigenvalues, Dct2d};

/// Data and smoothness terms of one velocity solve on the padded grid.
#[derive(Debug, Clone)]
pub struct VelocityProblem {
    /// Source gradient along `x`, padded.
    pub gx: Array2<f64>,
    /// Source gradient along `y`, padded.
    pub gy: Array2<f64>,
    /// `src - tgt`, padded.
    pub r: Array2<f64>,
    pub order: usize,
    pub lambda: f64,
    pub pad: usize,
    height: usize,
    width: usize,
}

/// Padded ADMM iterate plus convergence bookkeeping.
#[derive(Debug, Clone)]
pub struct AdmmSolution {
    pub vx: Array2<f64>,
    pub vy: Array2<f64>,
    pub iterations: usize,
    /// Final `||v - w|| / ||w||`.
    pub residual: f64,
    /// Final `||w - w_prev|| / ||w||`.
    pub dual_residual: f64,
}

impl VelocityProblem {
    pub fn new(src: &Image, tgt: &Image, cfg: &AdmmConfig) -> Result<Self> {
        ensure_same_dims("velocity solve", src.dims(), tgt.dims())?;
        cfg.validate()?;
        Self::from_arrays(&src.to_f64(), &tgt.to_f64(), cfg)
    }

    pub fn from_arrays(src: &Array2<f64>, tgt: &Array2<f64>, cfg: &AdmmConfig) -> Result<Self> {
        ensure_same_dims("velocity solve", src.dim(), tgt.dim())?;
        let (height, width) = src.dim();
        if height == 0 || width == 0 {
            return Err(Error::Shape("empty image".into()));
        }
        let (gx, gy) = central_gradient(src);
        let r = src - tgt;
        let pad = cfg.padding;
        let problem = Self {
            gx: reflect_pad(&gx, pad),
            gy: reflect_pad(&gy, pad),
            r: reflect_pad(&r, pad),
            order: cfg.order,
            lambda: cfg.lambda,
            pad,
            height,
            width,
        };
        let (ph, pw) = problem.padded_dims();
        if ph < cfg.order + 1 || pw < cfg.order + 1 {
            return Err(Error::Shape(format!(
                "{ph}x{pw} padded grid too small for order {}",
                cfg.order
            )));
        }
        Ok(problem)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn padded_dims(&self) -> (usize, usize) {
        self.r.dim()
    }

    /// Objective value of a padded field.
    pub fn objective(&self, vx: &Array2<f64>, vy: &Array2<f64>) -> Result<f64> {
        ensure_same_dims("objective", self.padded_dims(), vx.dim())?;
        ensure_same_dims("objective", self.padded_dims(), vy.dim())?;
        let mut data = 0.0;
        Zip::from(&self.gx)
            .and(&self.gy)
            .and(&self.r)
            .and(vx)
            .and(vy)
            .for_each(|&gx, &gy, &r, &a, &b| {
                let rho = gx * a + gy * b + r;
                data += rho * rho;
            });
        let smooth = nth_gradient_energy(vx, self.order)? + nth_gradient_energy(vy, self.order)?;
        Ok(0.5 * data + 0.5 * self.lambda * smooth)
    }

    /// Runs ADMM from the zero field.
    pub fn solve(&self, rho: f64, max_iterations: usize, tolerance: f64) -> AdmmSolution {
        let (ph, pw) = self.padded_dims();
        let plan = Dct2d::new(ph, pw);
        let mut denom = laplacian_eigenvalues(ph, pw);
        let order = self.order as i32;
        denom.mapv_inplace(|mu| self.lambda * mu.powi(order) + rho);

        let zeros = || Array2::<f64>::zeros((ph, pw));
        let (mut wx, mut wy) = (zeros(), zeros());
        let (mut ux, mut uy) = (zeros(), zeros());
        let (mut vx, mut vy) = (zeros(), zeros());
        let (mut bx, mut by) = (zeros(), zeros());
        let mut residual = 0.0;
        let mut dual_residual = 0.0;
        let mut iterations = 0;

        for it in 1..=max_iterations {
            iterations = it;
            // v-update: per-pixel minimizer of 1/2 (g.v + r)^2 + rho/2 |v - (w - u)|^2.
            Zip::from(&mut vx)
                .and(&mut vy)
                .and(&wx)
                .and(&wy)
                .and(&ux)
                .and(&uy)
                .for_each(|vx, vy, &wx, &wy, &ux, &uy| {
                    *vx = wx - ux;
                    *vy = wy - uy;
                });
            Zip::from(&mut vx)
                .and(&mut vy)
                .and(&self.gx)
                .and(&self.gy)
                .and(&self.r)
                .for_each(|vx, vy, &gx, &gy, &r| {
                    let t = (gx * *vx + gy * *vy + r) / (gx * gx + gy * gy + rho);
                    *vx -= gx * t;
                    *vy -= gy * t;
                });
            // w-update: (lambda L^n + rho) w = rho (v + u), diagonal in DCT space.
            for (b, v, u) in [(&mut bx, &vx, &ux), (&mut by, &vy, &uy)] {
                Zip::from(&mut *b).and(v).and(u).for_each(|b, &v, &u| *b = rho * (v + u));
                plan.forward(b);
                *b /= &denom;
                plan.inverse(b);
            }
            let (mut diff, mut change, mut norm) = (0.0, 0.0, 0.0);
            for (v, w, u, b) in [(&vx, &mut wx, &mut ux, &bx), (&vy, &mut wy, &mut uy, &by)] {
                Zip::from(u).and(w).and(v).and(b).for_each(|u, w, &v, &b| {
                    let d = v - b;
                    *u += d;
                    diff += d * d;
                    change += (b - *w) * (b - *w);
                    norm += b * b;
                    *w = b;
                });
            }
            residual = relative(diff, norm);
            dual_residual = relative(change, norm);
            if residual < tolerance && dual_residual < tolerance {
                break;
            }
        }
        AdmmSolution {
            vx: wx,
            vy: wy,
            iterations,
            residual,
            dual_residual,
        }
    }

    /// Crops a padded field back to the image grid.
    pub fn crop(&self, vx: &Array2<f64>, vy: &Array2<f64>) -> Result<VectorField> {
        VectorField::from_f64(
            &crop(vx, self.pad, self.height, self.width),
            &crop(vy, self.pad, self.height, self.width),
        )
    }
}

fn relative(num2: f64, den2: f64) -> f64 {
    if den2 > 0.0 {
        (num2 / den2).sqrt()
    } else if num2 > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// Velocity field moving `src` towards `tgt`: `src(p + v(p)) ~ tgt(p)`.
pub fn solve_velocity(src: &Image, tgt: &Image, cfg: &AdmmConfig) -> Result<VectorField> {
    let problem = VelocityProblem::new(src, tgt, cfg)?;
    let sol = problem.solve(cfg.rho, cfg.max_iterations, cfg.tolerance);
    problem.crop(&sol.vx, &sol.vy)
}

/// Order-`n` weighted partials of both components of a field, `x` first.
pub fn field_nth_gradient(field: &VectorField, n: usize) -> Result<[Vec<Partial>; 2]> {
    let dx = field.dx.mapv(f64::from);
    let dy = field.dy.mapv(f64::from);
    Ok([nth_gradient(&dx, n)?, nth_gradient(&dy, n)?])
}

pub fn image_nth_gradient(img: &Image, n: usize) -> Result<Vec<Partial>> {
    nth_gradient(&img.to_f64(), n)
}
