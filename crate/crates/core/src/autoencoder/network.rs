use alloc::vec;
use alloc::vec::Vec;

use super::AeError;
use crate::fmath;
use crate::numerics::Matrix;
use crate::rng::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Sigmoid,
    Swish,
    Linear,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Sigmoid => sigmoid(z),
            Activation::Swish => z * sigmoid(z),
            Activation::Linear => z,
        }
    }

    /// Derivative with respect to the pre-activation `z`.
    #[inline]
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Sigmoid => {
                let s = sigmoid(z);
                s * (1.0 - s)
            }
            Activation::Swish => {
                let s = sigmoid(z);
                s + z * s * (1.0 - s)
            }
            Activation::Linear => 1.0,
        }
    }
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + fmath::exp(-z))
}

/// Layer widths (input first) and per-layer activation kinds. Biases exist
/// but are frozen at zero and never updated.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    pub widths: Vec<usize>,
    pub activations: Vec<Activation>,
}

impl NetworkSpec {
    pub fn new(widths: Vec<usize>, activations: Vec<Activation>) -> Result<Self, AeError> {
        if widths.len() < 2 {
            return Err(AeError::BadSpec("need at least one layer"));
        }
        if activations.len() != widths.len() - 1 {
            return Err(AeError::BadSpec("one activation per layer required"));
        }
        if widths.iter().any(|w| *w == 0) {
            return Err(AeError::BadSpec("zero-width layer"));
        }
        Ok(NetworkSpec {
            widths,
            activations,
        })
    }

    pub fn n_layers(&self) -> usize {
        self.activations.len()
    }
}

/// Feedforward network; `weights[l]` maps layer `l` activations (width
/// `widths[l]`) to pre-activations of layer `l+1`.
#[derive(Debug, Clone)]
pub struct Network {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
    pub spec: NetworkSpec,
}

/// Forward pass bookkeeping for one batch: `post[0]` is the input, then one
/// pre-activation and one activation matrix per layer.
#[derive(Debug, Clone)]
pub struct BatchTrace {
    pub pre: Vec<Matrix>,
    pub post: Vec<Matrix>,
}

impl BatchTrace {
    pub fn output(&self) -> &Matrix {
        self.post.last().expect("trace has layers")
    }
}

impl Network {
    /// Glorot-uniform initialisation: `U(-s, s)` with
    /// `s = sqrt(6 / (fan_in + fan_out))`. Biases start (and stay) zero.
    pub fn init(spec: NetworkSpec, rng: &mut SeededRng) -> Self {
        let mut weights = Vec::with_capacity(spec.n_layers());
        let mut biases = Vec::with_capacity(spec.n_layers());
        for l in 0..spec.n_layers() {
            let fan_in = spec.widths[l];
            let fan_out = spec.widths[l + 1];
            let s = fmath::sqrt(6.0 / (fan_in + fan_out) as f64);
            weights.push(Matrix::from_fn(fan_out, fan_in, |_, _| rng.uniform(-s, s)));
            biases.push(vec![0.0; fan_out]);
        }
        Network {
            weights,
            biases,
            spec,
        }
    }

    pub fn from_weights(weights: Vec<Matrix>, activations: Vec<Activation>) -> Result<Self, AeError> {
        if weights.is_empty() {
            return Err(AeError::BadSpec("need at least one layer"));
        }
        let mut widths = vec![weights[0].cols()];
        for w in &weights {
            if w.cols() != *widths.last().unwrap() {
                return Err(AeError::BadSpec("layer widths do not chain"));
            }
            widths.push(w.rows());
        }
        let spec = NetworkSpec::new(widths, activations)?;
        let biases = weights.iter().map(|w| vec![0.0; w.rows()]).collect();
        Ok(Network {
            weights,
            biases,
            spec,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.spec.widths[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.spec.widths.last().unwrap()
    }

    /// Single-sample forward returning the output and per-layer activations.
    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, BatchTrace), AeError> {
        if x.len() != self.input_dim() {
            return Err(AeError::DimensionMismatch {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        let xm = Matrix::col_vec(x);
        let trace = self.forward_batch(&xm);
        Ok((trace.output().column(0), trace))
    }

    /// Output only; used as a lifting function.
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut a = x.to_vec();
        for (l, w) in self.weights.iter().enumerate() {
            let act = self.spec.activations[l];
            let mut z = w.matvec(&a);
            for (zi, b) in z.iter_mut().zip(&self.biases[l]) {
                *zi = act.apply(*zi + *b);
            }
            a = z;
        }
        a
    }

    /// Batched forward over the columns of `x` (`input_dim x m`).
    pub fn forward_batch(&self, x: &Matrix) -> BatchTrace {
        assert_eq!(x.rows(), self.input_dim());
        let m = x.cols();
        let mut pre = Vec::with_capacity(self.spec.n_layers());
        let mut post = Vec::with_capacity(self.spec.n_layers() + 1);
        post.push(x.clone());
        for (l, w) in self.weights.iter().enumerate() {
            let mut z = w.matmul(post.last().unwrap());
            for r in 0..z.rows() {
                let b = self.biases[l][r];
                if b != 0.0 {
                    for c in 0..m {
                        z.set(r, c, z.get(r, c) + b);
                    }
                }
            }
            let act = self.spec.activations[l];
            let a = match act {
                Activation::Linear => z.clone(),
                _ => {
                    let mut a = z.clone();
                    for v in a.as_mut_slice() {
                        *v = act.apply(*v);
                    }
                    a
                }
            };
            pre.push(z);
            post.push(a);
        }
        BatchTrace { pre, post }
    }

    /// Reverse-mode gradients for a batch. `upstream` is dL/d(output)
    /// (`output_dim x m`). Returns per-layer weight gradients and dL/d(input).
    /// Bias gradients are discarded: biases are frozen at zero.
    pub fn backward_batch(&self, trace: &BatchTrace, upstream: &Matrix) -> (Vec<Matrix>, Matrix) {
        let layers = self.spec.n_layers();
        assert_eq!(upstream.rows(), self.output_dim());
        assert_eq!(upstream.cols(), trace.output().cols());
        let mut grads: Vec<Matrix> = (0..layers).map(|_| Matrix::zeros(0, 0)).collect();
        let mut delta = upstream.clone();
        for l in (0..layers).rev() {
            let act = self.spec.activations[l];
            if act != Activation::Linear {
                let z = &trace.pre[l];
                for (d, zv) in delta.as_mut_slice().iter_mut().zip(z.as_slice()) {
                    *d *= act.derivative(*zv);
                }
            }
            grads[l] = delta.matmul(&trace.post[l].transpose());
            delta = self.weights[l].transpose().matmul(&delta);
        }
        (grads, delta)
    }

    /// Single-sample backward; thin wrapper over the batched path.
    pub fn backward(&self, trace: &BatchTrace, upstream: &[f64]) -> (Vec<Matrix>, Vec<f64>) {
        let up = Matrix::col_vec(upstream);
        let (grads, dx) = self.backward_batch(trace, &up);
        (grads, dx.column(0))
    }
}

/// Collapse a purely linear network to the single matrix `W_L ... W_1`.
pub fn collapse_linear(net: &Network) -> Result<Matrix, AeError> {
    if net
        .spec
        .activations
        .iter()
        .any(|a| *a != Activation::Linear)
    {
        return Err(AeError::NonlinearLayer);
    }
    Ok(linear_chain_collapse(&net.weights).0)
}

/// Product of a weight chain together with the prefix and suffix products
/// needed for gradient distribution:
/// `prefix[l] = W_{l-1} ... W_1` (identity for l = 0) and
/// `suffix[l] = W_L ... W_{l+2}` (identity for the last layer).
pub fn linear_chain_collapse(weights: &[Matrix]) -> (Matrix, Vec<Matrix>, Vec<Matrix>) {
    let layers = weights.len();
    let mut prefix = Vec::with_capacity(layers);
    prefix.push(Matrix::identity(weights[0].cols()));
    for l in 0..layers - 1 {
        let next = weights[l].matmul(prefix.last().unwrap());
        prefix.push(next);
    }
    let mut suffix = vec![Matrix::zeros(0, 0); layers];
    suffix[layers - 1] = Matrix::identity(weights[layers - 1].rows());
    for l in (0..layers - 1).rev() {
        suffix[l] = suffix[l + 1].matmul(&weights[l + 1]);
    }
    let collapsed = suffix[0].matmul(&weights[0]).matmul(&prefix[0]);
    (collapsed, prefix, suffix)
}

/// Distribute a gradient w.r.t. the collapsed product back onto each factor:
/// `dW_l = suffix[l]ᵀ · dP · prefix[l]ᵀ`.
pub fn linear_chain_grads(d_collapsed: &Matrix, prefix: &[Matrix], suffix: &[Matrix]) -> Vec<Matrix> {
    prefix
        .iter()
        .zip(suffix)
        .map(|(p, s)| s.transpose().matmul(d_collapsed).matmul(&p.transpose()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn net_from(weights: Vec<Matrix>, acts: Vec<Activation>) -> Network {
        Network::from_weights(weights, acts).unwrap()
    }

    #[test]
    fn forward_single_linear_layer() {
        let net = net_from(
            vec![Matrix::from_rows(&[&[2.0]])],
            vec![Activation::Linear],
        );
        let (y, _) = net.forward(&[3.0]).unwrap();
        assert_eq!(y, vec![6.0]);
    }

    #[test]
    fn sigmoid_at_zero_is_half() {
        let net = net_from(
            vec![Matrix::from_rows(&[&[1.0]])],
            vec![Activation::Sigmoid],
        );
        let (y, _) = net.forward(&[0.0]).unwrap();
        assert!((y[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn swish_matches_hand_values() {
        assert_eq!(Activation::Swish.apply(0.0), 0.0);
        let s1 = 1.0 / (1.0 + (-1.0f64).exp());
        assert!((Activation::Swish.apply(1.0) - s1).abs() < 1e-12);
        assert!((Activation::Swish.apply(1.0) - 0.7311).abs() < 1e-4);
    }

    #[test]
    fn forward_rejects_wrong_input_width() {
        let net = net_from(
            vec![Matrix::from_rows(&[&[1.0, 2.0]])],
            vec![Activation::Linear],
        );
        assert!(net.forward(&[1.0]).is_err());
    }

    #[test]
    fn backward_single_linear_layer_closed_form() {
        // loss = ½(Wx − y)² ⇒ dW = (Wx − y) xᵀ
        let net = net_from(
            vec![Matrix::from_rows(&[&[1.5]])],
            vec![Activation::Linear],
        );
        let x = [2.0];
        let (out, trace) = net.forward(&x).unwrap();
        let target = 1.0;
        let upstream = [out[0] - target]; // d(½e²)/d(out)
        let (grads, _) = net.backward(&trace, &upstream);
        let expect = (1.5 * 2.0 - 1.0) * 2.0;
        assert!((grads[0].get(0, 0) - expect).abs() < 1e-12);
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let mut rng = SeededRng::seed(2);
        let spec = NetworkSpec::new(
            vec![3, 5, 2],
            vec![Activation::Swish, Activation::Linear],
        )
        .unwrap();
        let net = Network::init(spec, &mut rng);
        let (_, trace) = net.forward(&[0.3, -0.2, 0.9]).unwrap();
        let (grads, dx) = net.backward(&trace, &[0.0, 0.0]);
        for g in grads {
            assert_eq!(g.max_abs(), 0.0);
        }
        assert!(dx.iter().all(|v| *v == 0.0));
    }

    /// Central finite differences against the analytic gradient of a scalar
    /// loss ½‖f(x) − t‖² for every weight, all activation kinds, depth ≤ 4.
    #[test]
    fn analytic_gradients_match_finite_differences() {
        let mut rng = SeededRng::seed(77);
        for (depth, act) in [
            (1usize, Activation::Linear),
            (2, Activation::Sigmoid),
            (3, Activation::Swish),
            (4, Activation::Sigmoid),
        ] {
            let mut widths = vec![2usize];
            for _ in 0..depth.saturating_sub(1) {
                widths.push(4);
            }
            widths.push(2);
            let mut acts = vec![act; widths.len() - 1];
            *acts.last_mut().unwrap() = Activation::Linear;
            let spec = NetworkSpec::new(widths, acts).unwrap();
            let mut net = Network::init(spec, &mut rng);
            let x = [0.4, -0.7];
            let t = [0.2, 0.9];

            let loss = |n: &Network| -> f64 {
                let y = n.eval(&x);
                0.5 * y.iter().zip(&t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
            };
            let (y, trace) = net.forward(&x).unwrap();
            let upstream: Vec<f64> = y.iter().zip(&t).map(|(a, b)| a - b).collect();
            let (grads, _) = net.backward(&trace, &upstream);

            let h = 1e-5;
            for l in 0..net.weights.len() {
                for r in 0..net.weights[l].rows() {
                    for c in 0..net.weights[l].cols() {
                        let orig = net.weights[l].get(r, c);
                        net.weights[l].set(r, c, orig + h);
                        let lp = loss(&net);
                        net.weights[l].set(r, c, orig - h);
                        let lm = loss(&net);
                        net.weights[l].set(r, c, orig);
                        let numeric = (lp - lm) / (2.0 * h);
                        let analytic = grads[l].get(r, c);
                        let denom = numeric.abs().max(analytic.abs()).max(1e-8);
                        assert!(
                            (numeric - analytic).abs() / denom < 1e-5,
                            "layer {l} ({r},{c}): numeric {numeric} vs analytic {analytic}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn collapse_two_scalars() {
        let net = net_from(
            vec![Matrix::from_rows(&[&[2.0]]), Matrix::from_rows(&[&[3.0]])],
            vec![Activation::Linear, Activation::Linear],
        );
        assert_eq!(collapse_linear(&net).unwrap().get(0, 0), 6.0);
    }

    #[test]
    fn collapse_matches_layered_forward() {
        let mut rng = SeededRng::seed(9);
        let spec = NetworkSpec::new(
            vec![3, 5, 4, 2],
            vec![Activation::Linear; 3],
        )
        .unwrap();
        let net = Network::init(spec, &mut rng);
        let c = collapse_linear(&net).unwrap();
        for _ in 0..20 {
            let x = rng.uniform_vec(3, -2.0, 2.0);
            let direct = net.eval(&x);
            let via_c = c.matvec(&x);
            for (a, b) in direct.iter().zip(&via_c) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn collapse_identity_layers() {
        let net = net_from(
            vec![Matrix::identity(3), Matrix::identity(3)],
            vec![Activation::Linear, Activation::Linear],
        );
        assert_eq!(collapse_linear(&net).unwrap(), Matrix::identity(3));
    }

    #[test]
    fn collapse_rejects_nonlinear_layers() {
        let net = net_from(
            vec![Matrix::identity(2)],
            vec![Activation::Sigmoid],
        );
        assert_eq!(collapse_linear(&net).unwrap_err(), AeError::NonlinearLayer);
    }

    #[test]
    fn chain_grads_match_finite_differences() {
        let mut rng = SeededRng::seed(41);
        let spec = NetworkSpec::new(vec![3, 4, 2], vec![Activation::Linear; 2]).unwrap();
        let mut net = Network::init(spec, &mut rng);
        // loss = sum of entries of the collapsed matrix squared / 2
        let loss = |w: &[Matrix]| -> f64 {
            let (c, _, _) = linear_chain_collapse(w);
            0.5 * c.as_slice().iter().map(|v| v * v).sum::<f64>()
        };
        let (c, pre, suf) = linear_chain_collapse(&net.weights);
        let grads = linear_chain_grads(&c, &pre, &suf);
        let h = 1e-6;
        for l in 0..net.weights.len() {
            for r in 0..net.weights[l].rows() {
                for cc in 0..net.weights[l].cols() {
                    let orig = net.weights[l].get(r, cc);
                    net.weights[l].set(r, cc, orig + h);
                    let lp = loss(&net.weights);
                    net.weights[l].set(r, cc, orig - h);
                    let lm = loss(&net.weights);
                    net.weights[l].set(r, cc, orig);
                    let numeric = (lp - lm) / (2.0 * h);
                    let analytic = grads[l].get(r, cc);
                    assert!(
                        (numeric - analytic).abs() < 1e-5 * numeric.abs().max(1.0),
                        "layer {l} ({r},{cc})"
                    );
                }
            }
        }
    }

    #[test]
    fn batched_and_single_backward_agree() {
        let mut rng = SeededRng::seed(5);
        let spec = NetworkSpec::new(
            vec![2, 6, 3],
            vec![Activation::Swish, Activation::Linear],
        )
        .unwrap();
        let net = Network::init(spec, &mut rng);
        let x = Matrix::from_fn(2, 4, |_, _| rng.uniform(-1.0, 1.0));
        let up = Matrix::from_fn(3, 4, |_, _| rng.uniform(-1.0, 1.0));
        let trace = net.forward_batch(&x);
        let (batch_grads, _) = net.backward_batch(&trace, &up);

        let mut acc: Vec<Matrix> = net
            .weights
            .iter()
            .map(|w| Matrix::zeros(w.rows(), w.cols()))
            .collect();
        for j in 0..4 {
            let xj = x.column(j);
            let (_, tr) = net.forward(&xj).unwrap();
            let (g, _) = net.backward(&tr, &up.column(j));
            for (a, b) in acc.iter_mut().zip(&g) {
                a.add_assign(b);
            }
        }
        for (a, b) in acc.iter().zip(&batch_grads) {
            assert!(a.sub(b).max_abs() < 1e-10);
        }
    }
}
