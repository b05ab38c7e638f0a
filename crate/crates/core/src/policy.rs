//! Feed-forward policy network `a = f(S, w)` over a flat genome.
//!
//! Genome layout, layer by layer: the weight block row-major with one row per
//! output unit, followed by the bias block.

use thiserror::Error;

/// Hidden and output widths of the default network.
pub const DEFAULT_WIDTHS: [usize; 4] = [45, 15, 6, 1];

#[derive(Debug, Error, PartialEq)]
pub enum PolicyError {
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
    #[error("genome has {found} parameters, topology needs {expected}")]
    GenomeLength { expected: usize, found: usize },
    #[error("state has {found} entries, topology input is {expected}")]
    StateLength { expected: usize, found: usize },
    #[error("genome contains a non-finite value")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Sigmoid,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Sigmoid => 1.0 / (1.0 + (-x).exp()),
            Activation::Identity => x,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Sigmoid => "sigmoid",
            Activation::Identity => "identity",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "tanh" => Some(Activation::Tanh),
            "sigmoid" => Some(Activation::Sigmoid),
            "identity" => Some(Activation::Identity),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    layer_sizes: Vec<usize>,
    activations: Vec<Activation>,
}

impl Topology {
    pub fn new(layer_sizes: Vec<usize>, activations: Vec<Activation>) -> Result<Self, PolicyError> {
        if layer_sizes.len() < 2 || layer_sizes.len() != activations.len() + 1 {
            return Err(PolicyError::InvalidTopology(format!(
                "{} layer sizes need {} activations, got {}",
                layer_sizes.len(),
                layer_sizes.len().saturating_sub(1),
                activations.len()
            )));
        }
        if layer_sizes.contains(&0) {
            return Err(PolicyError::InvalidTopology("layer sizes must be >= 1".into()));
        }
        if *layer_sizes.last().unwrap() != 1 {
            return Err(PolicyError::InvalidTopology("output layer must have one unit".into()));
        }
        Ok(Topology {
            layer_sizes,
            activations,
        })
    }

    /// `input → 45 → 15 → 6 → 1` with tanh hidden layers and a sigmoid head.
    pub fn default_for(input_dim: usize) -> Result<Self, PolicyError> {
        Self::with_hidden(input_dim, &DEFAULT_WIDTHS[..3])
    }

    /// Tanh hidden layers of the given widths and a single sigmoid output.
    pub fn with_hidden(input_dim: usize, hidden: &[usize]) -> Result<Self, PolicyError> {
        let mut sizes = vec![input_dim];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        let mut acts = vec![Activation::Tanh; hidden.len()];
        acts.push(Activation::Sigmoid);
        Self::new(sizes, acts)
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn activations(&self) -> &[Activation] {
        &self.activations
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn param_count(&self) -> usize {
        self.layer_sizes
            .windows(2)
            .map(|w| w[0] * w[1] + w[1])
            .sum()
    }

    fn max_width(&self) -> usize {
        *self.layer_sizes.iter().max().unwrap()
    }
}

/// Contiguous block inside the genome.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Block {
    pub offset: usize,
    pub rows: usize,
    pub cols: usize,
}

impl Block {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerSlices {
    /// `outputs × inputs`, row-major.
    pub weights: Block,
    /// `outputs × 1`.
    pub bias: Block,
}

pub fn genome_slices(t: &Topology) -> Vec<LayerSlices> {
    let mut offset = 0;
    t.layer_sizes
        .windows(2)
        .map(|w| {
            let weights = Block {
                offset,
                rows: w[1],
                cols: w[0],
            };
            offset += weights.len();
            let bias = Block {
                offset,
                rows: w[1],
                cols: 1,
            };
            offset += bias.len();
            LayerSlices { weights, bias }
        })
        .collect()
}

/// Flat parameter vector; the unit CMA-ES searches over.
#[derive(Debug, Clone, PartialEq)]
pub struct Genome(pub Vec<f64>);

impl Genome {
    pub fn zeros(t: &Topology) -> Self {
        Genome(vec![0.0; t.param_count()])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn check(&self, t: &Topology) -> Result<(), PolicyError> {
        if self.0.len() != t.param_count() {
            return Err(PolicyError::GenomeLength {
                expected: t.param_count(),
                found: self.0.len(),
            });
        }
        if self.0.iter().any(|v| !v.is_finite()) {
            return Err(PolicyError::NonFinite);
        }
        Ok(())
    }
}

/// One dense layer in matrix form.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub outputs: usize,
    pub inputs: usize,
    /// Row-major `outputs × inputs`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

pub fn unflatten(g: &Genome, t: &Topology) -> Result<Vec<DenseLayer>, PolicyError> {
    g.check(t)?;
    Ok(genome_slices(t)
        .into_iter()
        .map(|s| DenseLayer {
            outputs: s.weights.rows,
            inputs: s.weights.cols,
            weights: g.0[s.weights.range()].to_vec(),
            bias: g.0[s.bias.range()].to_vec(),
        })
        .collect())
}

pub fn flatten(layers: &[DenseLayer]) -> Genome {
    let mut v = Vec::new();
    for l in layers {
        v.extend_from_slice(&l.weights);
        v.extend_from_slice(&l.bias);
    }
    Genome(v)
}

/// Reusable evaluator for one genome; avoids per-sample allocation.
pub struct Policy<'a> {
    genome: &'a [f64],
    topology: &'a Topology,
    slices: Vec<LayerSlices>,
    buf_a: Vec<f64>,
    buf_b: Vec<f64>,
}

impl<'a> Policy<'a> {
    pub fn new(genome: &'a [f64], topology: &'a Topology) -> Result<Self, PolicyError> {
        if genome.len() != topology.param_count() {
            return Err(PolicyError::GenomeLength {
                expected: topology.param_count(),
                found: genome.len(),
            });
        }
        let w = topology.max_width();
        Ok(Policy {
            genome,
            topology,
            slices: genome_slices(topology),
            buf_a: vec![0.0; w],
            buf_b: vec![0.0; w],
        })
    }

    pub fn forward(&mut self, state: &[f64]) -> Result<f64, PolicyError> {
        let input = self.topology.input_dim();
        if state.len() != input {
            return Err(PolicyError::StateLength {
                expected: input,
                found: state.len(),
            });
        }
        self.buf_a[..input].copy_from_slice(state);
        for (s, act) in self.slices.iter().zip(&self.topology.activations) {
            let (rows, cols) = (s.weights.rows, s.weights.cols);
            let w = &self.genome[s.weights.range()];
            let b = &self.genome[s.bias.range()];
            let x = &self.buf_a[..cols];
            for (r, out) in self.buf_b[..rows].iter_mut().enumerate() {
                let row = &w[r * cols..(r + 1) * cols];
                let z: f64 = row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + b[r];
                *out = act.apply(z);
            }
            std::mem::swap(&mut self.buf_a, &mut self.buf_b);
        }
        Ok(self.buf_a[0])
    }
}

pub fn forward(g: &Genome, t: &Topology, s: &[f64]) -> Result<f64, PolicyError> {
    Policy::new(&g.0, t)?.forward(s)
}

/// Label 1 iff the output is at least `threshold`.
pub fn predict(g: &Genome, t: &Topology, s: &[f64], threshold: f64) -> Result<u8, PolicyError> {
    Ok(label_for(forward(g, t, s)?, threshold))
}

#[inline]
pub fn label_for(probability: f64, threshold: f64) -> u8 {
    u8::from(probability >= threshold)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sig(x: f64) -> f64 {
        1.0 / (1.0 + (-x).exp())
    }

    #[test]
    fn param_counts() {
        assert_eq!(Topology::default_for(30).unwrap().param_count(), 2188);
        assert_eq!(Topology::default_for(2).unwrap().param_count(), 928);
        let t = Topology::new(vec![1, 1], vec![Activation::Sigmoid]).unwrap();
        assert_eq!(t.param_count(), 2);
    }

    #[test]
    fn topology_validation() {
        assert!(Topology::new(vec![2, 3, 1], vec![Activation::Tanh]).is_err());
        assert!(Topology::new(vec![2, 0, 1], vec![Activation::Tanh, Activation::Sigmoid]).is_err());
        assert!(Topology::new(vec![2], vec![]).is_err());
    }

    #[test]
    fn zero_genome_outputs_half() {
        let t = Topology::default_for(3).unwrap();
        let g = Genome::zeros(&t);
        assert_eq!(forward(&g, &t, &[1.0, -2.0, 0.3]).unwrap(), 0.5);
        assert_eq!(predict(&g, &t, &[4.0, 0.0, 0.0], 0.5).unwrap(), 1);
    }

    #[test]
    fn single_neuron_hand_case() {
        let t = Topology::new(vec![1, 1], vec![Activation::Sigmoid]).unwrap();
        let g = Genome(vec![2.0, -1.0]);
        let p = forward(&g, &t, &[1.0]).unwrap();
        assert!((p - sig(1.0)).abs() < 1e-15);
        assert!((p - 0.7311).abs() < 1e-4);
    }

    #[test]
    fn two_layer_hand_case() {
        let t = Topology::new(vec![1, 1, 1], vec![Activation::Tanh, Activation::Sigmoid]).unwrap();
        let g = Genome(vec![1.0, 0.0, 1.0, 0.0]);
        let p = forward(&g, &t, &[1.0]).unwrap();
        assert!((p - sig(1f64.tanh())).abs() < 1e-15);
        assert!((p - 0.6817).abs() < 1e-4);
    }

    #[test]
    fn threshold_boundary_is_inclusive() {
        assert_eq!(label_for(0.5, 0.5), 1);
        assert_eq!(label_for(0.49, 0.5), 0);
    }

    #[test]
    fn dimension_errors() {
        let t = Topology::default_for(2).unwrap();
        assert!(matches!(
            forward(&Genome(vec![0.0; 5]), &t, &[0.0, 0.0]),
            Err(PolicyError::GenomeLength { .. })
        ));
        assert!(matches!(
            forward(&Genome::zeros(&t), &t, &[0.0]),
            Err(PolicyError::StateLength { .. })
        ));
    }

    #[test]
    fn slices_layout() {
        let t = Topology::new(vec![2, 3, 1], vec![Activation::Tanh, Activation::Sigmoid]).unwrap();
        let s = genome_slices(&t);
        let blocks: Vec<(usize, usize)> = s
            .iter()
            .flat_map(|l| [(l.weights.offset, l.weights.len()), (l.bias.offset, l.bias.len())])
            .collect();
        assert_eq!(blocks, vec![(0, 6), (6, 3), (9, 3), (12, 1)]);
    }

    #[test]
    fn slices_tile_the_genome() {
        let t = Topology::default_for(7).unwrap();
        let mut next = 0;
        for l in genome_slices(&t) {
            for b in [l.weights, l.bias] {
                assert_eq!(b.offset, next);
                next += b.len();
            }
        }
        assert_eq!(next, t.param_count());
    }

    #[test]
    fn negating_final_layer_complements_output() {
        let t = Topology::default_for(4).unwrap();
        let g = Genome((0..t.param_count()).map(|i| ((i * 37 % 101) as f64 / 50.0) - 1.0).collect());
        let mut layers = unflatten(&g, &t).unwrap();
        let last = layers.last_mut().unwrap();
        last.weights.iter_mut().for_each(|w| *w = -*w);
        last.bias.iter_mut().for_each(|b| *b = -*b);
        let neg = flatten(&layers);
        let s = [0.3, -1.2, 0.8, 2.0];
        let p = forward(&g, &t, &s).unwrap();
        let q = forward(&neg, &t, &s).unwrap();
        assert!((p + q - 1.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn flatten_unflatten_round_trip(values in prop::collection::vec(-3.0f64..3.0, 61)) {
            let t = Topology::new(vec![4, 6, 3, 1], vec![Activation::Tanh, Activation::Tanh, Activation::Sigmoid]).unwrap();
            prop_assert_eq!(t.param_count(), 30 + 21 + 4);
            let g = Genome(values[..t.param_count()].to_vec());
            let back = flatten(&unflatten(&g, &t).unwrap());
            prop_assert_eq!(&back, &g);
            let s = [values[55], values[56], values[57], values[58]];
            prop_assert_eq!(forward(&g, &t, &s).unwrap().to_bits(), forward(&back, &t, &s).unwrap().to_bits());
        }

        #[test]
        fn output_in_open_unit_interval(
            values in prop::collection::vec(-2.0f64..2.0, 928),
            s in prop::collection::vec(-10.0f64..10.0, 2),
        ) {
            let t = Topology::default_for(2).unwrap();
            let p = forward(&Genome(values), &t, &s).unwrap();
            prop_assert!(p > 0.0 && p < 1.0);
        }

        #[test]
        fn predict_monotone_in_threshold(p in 0.0f64..1.0, lo in 0.0f64..1.0, hi in 0.0f64..1.0) {
            let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
            prop_assert!(label_for(p, hi) <= label_for(p, lo));
        }
    }
}
