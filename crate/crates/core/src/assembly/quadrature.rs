//! Triangle quadrature rules in barycentric coordinates.

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 3]>,
    /// Weights sum to one; multiply by the element area.
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl QuadratureRule {
    /// Edge-midpoint rule, exact for quadratics.
    pub fn edge_midpoint() -> Self {
        Self {
            points: vec![[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]],
            weights: vec![1.0 / 3.0; 3],
            degree: 2,
        }
    }

    pub fn centroid() -> Self {
        Self {
            points: vec![[1.0 / 3.0; 3]],
            weights: vec![1.0],
            degree: 1,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

impl Default for QuadratureRule {
    fn default() -> Self {
        Self::edge_midpoint()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    // ∫_K λ_i λ_j = |K| (1 + δ_ij) / 12
    #[test]
    fn midpoint_rule_integrates_products_of_linears() {
        let q = QuadratureRule::edge_midpoint();
        assert!((q.weights.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let f: [f64; 3] = [rng.gen(), rng.gen(), rng.gen()];
            let g: [f64; 3] = [rng.gen(), rng.gen(), rng.gen()];
            let area: f64 = rng.gen_range(0.01..3.0);
            let mut exact = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    exact += f[i] * g[j] * area * if i == j { 2.0 } else { 1.0 } / 12.0;
                }
            }
            let approx: f64 = q
                .points
                .iter()
                .zip(&q.weights)
                .map(|(l, w)| {
                    let fv: f64 = (0..3).map(|k| f[k] * l[k]).sum();
                    let gv: f64 = (0..3).map(|k| g[k] * l[k]).sum();
                    w * area * fv * gv
                })
                .sum();
            assert!((approx - exact).abs() <= 1e-13 * exact.abs().max(1.0));
        }
    }
}
