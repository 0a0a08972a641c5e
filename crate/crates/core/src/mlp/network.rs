use rand::Rng;

/// Logistic sigmoid `1 / (1 + e^-x)`, evaluated without overflow for any
/// finite `x`.
pub fn logsig(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Dense layers with log-sigmoid units everywhere, including the output.
///
/// `weights[l]` is row-major with one row per destination unit, so its
/// length is `layer_sizes[l + 1] * layer_sizes[l]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    layer_sizes: Vec<usize>,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

/// Loss gradients with the same shapes as a [`Network`]'s parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn norm(&self) -> f64 {
        self.weights
            .iter()
            .chain(&self.biases)
            .flatten()
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt()
    }

    fn flat(&self) -> Vec<f64> {
        flatten(&self.weights, &self.biases)
    }
}

fn flatten(weights: &[Vec<f64>], biases: &[Vec<f64>]) -> Vec<f64> {
    weights
        .iter()
        .zip(biases)
        .flat_map(|(w, b)| w.iter().chain(b))
        .copied()
        .collect()
}

impl Network {
    /// All-zero parameters. Panics unless there are at least two layers of
    /// positive width.
    pub fn zeros(layer_sizes: &[usize]) -> Self {
        assert!(layer_sizes.len() >= 2, "need input and output layers");
        assert!(layer_sizes.iter().all(|&n| n > 0), "layer widths must be positive");
        let weights = layer_sizes.windows(2).map(|p| vec![0.0; p[0] * p[1]]).collect();
        let biases = layer_sizes[1..].iter().map(|&n| vec![0.0; n]).collect();
        Self {
            layer_sizes: layer_sizes.to_vec(),
            weights,
            biases,
        }
    }

    /// Weights and biases uniform in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`.
    pub fn random<R: Rng + ?Sized>(layer_sizes: &[usize], rng: &mut R) -> Self {
        let mut net = Self::zeros(layer_sizes);
        for (l, (w, b)) in net.weights.iter_mut().zip(&mut net.biases).enumerate() {
            let bound = 1.0 / (layer_sizes[l] as f64).sqrt();
            for v in w.iter_mut().chain(b.iter_mut()) {
                *v = rng.random_range(-bound..=bound);
            }
        }
        net
    }

    /// Assemble from explicit parameters, checking every shape.
    pub fn from_parts(
        layer_sizes: Vec<usize>,
        weights: Vec<Vec<f64>>,
        biases: Vec<Vec<f64>>,
    ) -> Result<Self, String> {
        if layer_sizes.len() < 2 || layer_sizes.contains(&0) {
            return Err(format!("bad layer sizes {layer_sizes:?}"));
        }
        let layers = layer_sizes.len() - 1;
        if weights.len() != layers || biases.len() != layers {
            return Err(format!(
                "{} weight and {} bias blocks for {layers} layers",
                weights.len(),
                biases.len()
            ));
        }
        for l in 0..layers {
            let (fan_in, fan_out) = (layer_sizes[l], layer_sizes[l + 1]);
            if weights[l].len() != fan_in * fan_out {
                return Err(format!(
                    "layer {l}: {} weights, expected {fan_out}x{fan_in}",
                    weights[l].len()
                ));
            }
            if biases[l].len() != fan_out {
                return Err(format!("layer {l}: {} biases, expected {fan_out}", biases[l].len()));
            }
        }
        Ok(Self {
            layer_sizes,
            weights,
            biases,
        })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().expect("at least two layers")
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<f64>] {
        &self.biases
    }

    pub fn weights_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.weights
    }

    pub fn biases_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.biases
    }

    pub fn param_count(&self) -> usize {
        self.weights.iter().chain(&self.biases).map(Vec::len).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.biases).flatten().all(|v| v.is_finite())
    }

    fn param_mut(&mut self, mut index: usize) -> &mut f64 {
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            if index < w.len() {
                return &mut w[index];
            }
            index -= w.len();
            if index < b.len() {
                return &mut b[index];
            }
            index -= b.len();
        }
        panic!("parameter index out of range");
    }

    /// Activations of every layer, the input first. `x` must already have
    /// length `input_dim`.
    pub fn activations(&self, x: &[f64]) -> Vec<Vec<f64>> {
        debug_assert_eq!(x.len(), self.input_dim());
        let mut acts = Vec::with_capacity(self.layer_sizes.len());
        acts.push(x.to_vec());
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let fan_in = self.layer_sizes[l];
            let prev = &acts[l];
            let next = w
                .chunks_exact(fan_in)
                .zip(b)
                .map(|(row, bias)| logsig(row.iter().zip(prev).map(|(wi, ai)| wi * ai).sum::<f64>() + bias))
                .collect();
            acts.push(next);
        }
        acts
    }

    pub fn output(&self, x: &[f64]) -> Vec<f64> {
        self.activations(x).pop().expect("output layer")
    }

    /// Mean squared error of the output against `target`.
    pub fn loss(&self, x: &[f64], target: &[f64]) -> f64 {
        mse(&self.output(x), target)
    }

    /// Backpropagated gradient of [`Network::loss`] for one sample.
    pub fn gradients(&self, x: &[f64], target: &[f64]) -> Gradients {
        let acts = self.activations(x);
        let layers = self.weights.len();
        let mut gw: Vec<Vec<f64>> = self.weights.iter().map(|w| vec![0.0; w.len()]).collect();
        let mut gb: Vec<Vec<f64>> = self.biases.iter().map(|b| vec![0.0; b.len()]).collect();

        let out = &acts[layers];
        let scale = 2.0 / out.len() as f64;
        // error signal at the pre-activation of the current layer
        let mut delta: Vec<f64> = out
            .iter()
            .zip(target)
            .map(|(y, t)| scale * (y - t) * y * (1.0 - y))
            .collect();

        for l in (0..layers).rev() {
            let fan_in = self.layer_sizes[l];
            let prev = &acts[l];
            for (j, d) in delta.iter().enumerate() {
                let row = &mut gw[l][j * fan_in..(j + 1) * fan_in];
                for (g, a) in row.iter_mut().zip(prev) {
                    *g = d * a;
                }
                gb[l][j] = *d;
            }
            if l > 0 {
                let mut back = vec![0.0; fan_in];
                for (j, d) in delta.iter().enumerate() {
                    let row = &self.weights[l][j * fan_in..(j + 1) * fan_in];
                    for (acc, w) in back.iter_mut().zip(row) {
                        *acc += w * d;
                    }
                }
                delta = back.iter().zip(prev).map(|(s, a)| s * a * (1.0 - a)).collect();
            }
        }
        Gradients {
            weights: gw,
            biases: gb,
        }
    }
}

pub(crate) fn mse(output: &[f64], target: &[f64]) -> f64 {
    output.iter().zip(target).map(|(y, t)| (y - t) * (y - t)).sum::<f64>() / output.len() as f64
}

const FD_STEP: f64 = 1e-5;
// relative error is measured against max(|analytic|, |numeric|, this floor)
const GRAD_FLOOR: f64 = 1e-6;

/// Largest relative disagreement between backpropagation and central
/// finite differences over every parameter.
pub fn grad_check(net: &Network, x: &[f64], target: &[f64]) -> f64 {
    grad_check_with(net, x, target, |n, x, t| n.gradients(x, t))
}

/// [`grad_check`] against an arbitrary analytic gradient routine.
pub fn grad_check_with<F>(net: &Network, x: &[f64], target: &[f64], analytic: F) -> f64
where
    F: Fn(&Network, &[f64], &[f64]) -> Gradients,
{
    let grads = analytic(net, x, target).flat();
    let mut probe = net.clone();
    let mut worst: f64 = 0.0;
    for (i, &g) in grads.iter().enumerate() {
        let orig = *probe.param_mut(i);
        *probe.param_mut(i) = orig + FD_STEP;
        let plus = probe.loss(x, target);
        *probe.param_mut(i) = orig - FD_STEP;
        let minus = probe.loss(x, target);
        *probe.param_mut(i) = orig;
        let numeric = (plus - minus) / (2.0 * FD_STEP);
        let denom = g.abs().max(numeric.abs()).max(GRAD_FLOOR);
        worst = worst.max((g - numeric).abs() / denom);
    }
    worst
}
