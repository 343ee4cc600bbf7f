//! Classic fixed-step fourth-order Runge-Kutta.

use crate::scalar::Scalar;

/// One RK4 step of the scalar autonomous equation `y' = f(y)`.
#[inline]
pub fn rk4_step<T: Scalar>(y: T, h: T, f: impl Fn(T) -> T) -> T {
    let half = T::half() * h;
    let k1 = f(y);
    let k2 = f(y + half * k1);
    let k3 = f(y + half * k2);
    let k4 = f(y + h * k3);
    y + h / T::lit(6.0) * (k1 + T::two() * (k2 + k3) + k4)
}

/// RK4 for autonomous systems `y' = f(y)` with scratch buffers reused across steps.
pub struct Rk4System<T> {
    k1: Vec<T>,
    k2: Vec<T>,
    k3: Vec<T>,
    k4: Vec<T>,
    tmp: Vec<T>,
}

impl<T: Scalar> Rk4System<T> {
    pub fn new(dim: usize) -> Self {
        Self {
            k1: vec![T::zero(); dim],
            k2: vec![T::zero(); dim],
            k3: vec![T::zero(); dim],
            k4: vec![T::zero(); dim],
            tmp: vec![T::zero(); dim],
        }
    }

    /// Advances `y` in place by `h`. `f(y, out)` writes the derivative into `out`.
    pub fn step(&mut self, y: &mut [T], h: T, mut f: impl FnMut(&[T], &mut [T])) {
        let half = T::half() * h;
        f(y, &mut self.k1);
        axpy(&mut self.tmp, y, half, &self.k1);
        f(&self.tmp, &mut self.k2);
        axpy(&mut self.tmp, y, half, &self.k2);
        f(&self.tmp, &mut self.k3);
        axpy(&mut self.tmp, y, h, &self.k3);
        f(&self.tmp, &mut self.k4);
        let sixth = h / T::lit(6.0);
        let slopes = self.k1.iter().zip(&self.k2).zip(&self.k3).zip(&self.k4);
        for (yi, (((&a, &b), &c), &d)) in y.iter_mut().zip(slopes) {
            *yi += sixth * (a + T::two() * (b + c) + d);
        }
    }
}

/// `out = y + a * k`.
fn axpy<T: Scalar>(out: &mut [T], y: &[T], a: T, k: &[T]) {
    for ((o, &yi), &ki) in out.iter_mut().zip(y).zip(k) {
        *o = yi + a * ki;
    }
}

/// Sample times `0, h, 2h, ...` ending exactly at `t_end`.
///
/// When `t_end` is not a whole number of steps the last interval is shorter.
pub fn uniform_grid<T: Scalar>(t_end: T, h: T) -> Vec<T> {
    let ratio = t_end / h;
    let nearest = ratio.round();
    let exact = (ratio - nearest).abs() <= T::lit(1e-9) * nearest.max(T::one());
    let whole = if exact { nearest } else { ratio.floor() };
    let k = whole.to_usize().unwrap_or(0);
    let mut grid: Vec<T> = (0..k).map(|i| h * T::from_usize_lossy(i)).collect();
    if !exact {
        grid.push(h * whole);
    }
    grid.push(t_end);
    grid
}

/// Step sizes between consecutive grid points: `h` everywhere but the last
/// interval, which closes exactly on the final time.
pub fn grid_steps<T: Scalar>(grid: &[T], h: T) -> impl Iterator<Item = T> + '_ {
    let last = grid.len().saturating_sub(2);
    grid.windows(2)
        .enumerate()
        .map(move |(i, w)| if i == last { w[1] - w[0] } else { h })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_fourth_order() {
        // y' = -y, y(0) = 1, one unit of time; error ratio for halving h ~ 16.
        let err = |n: usize| {
            let h = 1.0 / n as f64;
            let mut y = 1.0f64;
            for _ in 0..n {
                y = rk4_step(y, h, |v| -v);
            }
            (y - (-1.0f64).exp()).abs()
        };
        let ratio = err(10) / err(20);
        assert!((ratio - 16.0).abs() < 1.0, "ratio {ratio}");
    }

    #[test]
    fn system_matches_scalar() {
        let mut sys = Rk4System::new(1);
        let mut y = [0.3f64];
        sys.step(&mut y, 0.1, |v, out| out[0] = v[0] * (1.0 - v[0]));
        let s = rk4_step(0.3f64, 0.1, |v| v * (1.0 - v));
        assert_eq!(y[0], s);
    }

    #[test]
    fn grid_shapes() {
        let g = uniform_grid(20.0f64, 0.01);
        assert_eq!(g.len(), 2001);
        assert_eq!(*g.last().unwrap(), 20.0);
        let g = uniform_grid(1.0f64, 0.3);
        assert_eq!(g.len(), 5);
        assert!((g[3] - 0.9).abs() < 1e-15);
        assert_eq!(g[4], 1.0);
    }
}
