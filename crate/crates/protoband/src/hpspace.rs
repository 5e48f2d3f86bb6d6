//! Hyperparameter search spaces and their unit-hypercube encoding.
//!
//! Four space variants are supported: optimization parameters only (`S1`),
//! optimization plus a learned augmentation policy with per-operation
//! magnitude spreads (`S2Full`), a variant sharing one spread across all
//! operations (`S2SharedSigma`), and a variant that keeps the optimization
//! space but draws the spreads at random per training run instead of
//! searching them (`S2FixedNopsRandomSigma`).
//!
//! Configurations map bijectively onto `[0,1]^d` for density modeling:
//! log-uniform parameters map to their normalized log position, while
//! categorical and stepped parameters map to bin centers `(index + 0.5) / n`.
//! `decode(encode(c)) == c` holds exactly for every configuration produced by
//! [`SearchSpace::decode`] or [`SearchSpace::sample_uniform`]; see
//! [`ParamKind::encode_value`] for how that is achieved for continuous
//! parameters.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{Error, Result};

/// Names of the ten augmentation operations, in policy order.
pub const AUG_OP_NAMES: [&str; 10] = [
    "rotate",
    "posterize",
    "solarize",
    "color",
    "contrast",
    "brightness",
    "sharpness",
    "shear",
    "translate",
    "cutout",
];

/// Which search space a run explores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceVariant {
    /// Optimization parameters only.
    S1,
    /// Optimization plus `n_ops` and one magnitude spread per operation.
    S2Full,
    /// Optimization plus `n_ops` and a single shared magnitude spread.
    S2SharedSigma,
    /// Optimization parameters searched; one operation per batch with
    /// per-run random spreads (nothing augmentation-related is searched).
    S2FixedNopsRandomSigma,
}

impl fmt::Display for SpaceVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SpaceVariant::S1 => "s1",
            SpaceVariant::S2Full => "s2_full",
            SpaceVariant::S2SharedSigma => "s2_shared_sigma",
            SpaceVariant::S2FixedNopsRandomSigma => "s2_fixed_nops_random_sigma",
        };
        f.write_str(s)
    }
}

/// Domain of a single hyperparameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParamKind {
    /// Unordered finite choice.
    Categorical { choices: Vec<String> },
    /// Continuous value sampled log-uniformly on `[lo, hi]`, `0 < lo < hi`.
    LogUniform { lo: f64, hi: f64 },
    /// Finite ordered set of integers, uniform over the indices.
    SteppedInt { values: Vec<i64> },
    /// Every integer in `lo..=hi`, uniform.
    IntRange { lo: i64, hi: i64 },
}

/// One dimension of a search space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamDescriptor {
    pub name: String,
    pub kind: ParamKind,
}

/// Concrete value of one hyperparameter.
///
/// `Int` must precede `Float` so integral JSON numbers deserialize back to
/// the integer variant; floats always serialize with a fractional part, so
/// the two never collide on the wire.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Categorical(String),
    Int(i64),
    Float(f64),
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Categorical(s) => f.write_str(s),
            ParamValue::Int(v) => write!(f, "{v}"),
            ParamValue::Float(v) => {
                // ryu-style shortest representation, matching the JSON form.
                let mut buf = ryu_format(*v);
                if !buf.contains('.') && !buf.contains('e') {
                    buf.push_str(".0");
                }
                f.write_str(&buf)
            }
        }
    }
}

fn ryu_format(v: f64) -> String {
    serde_json::to_string(&v).unwrap_or_else(|_| v.to_string())
}

/// A point in `[0,1]^d`.
pub type UnitPoint = Vec<f64>;

/// One sampled hyperparameter assignment.
///
/// `id` is content-derived (a SHA-256 prefix of the canonical JSON), so a
/// promoted trial carrying the same values shares its parent's id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub space: SpaceVariant,
    pub values: BTreeMap<String, ParamValue>,
    pub id: String,
}

impl Configuration {
    fn new(space: SpaceVariant, values: BTreeMap<String, ParamValue>) -> Self {
        let id = checksum_of(&values);
        Configuration { space, values, id }
    }

    /// Canonical key-sorted JSON of the values.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(&self.values).expect("param values always serialize")
    }

    pub fn f64_value(&self, name: &str) -> Result<f64> {
        match self.values.get(name) {
            Some(ParamValue::Float(v)) => Ok(*v),
            Some(ParamValue::Int(v)) => Ok(*v as f64),
            other => Err(Error::Space(format!("{name}: expected number, got {other:?}"))),
        }
    }

    pub fn i64_value(&self, name: &str) -> Result<i64> {
        match self.values.get(name) {
            Some(ParamValue::Int(v)) => Ok(*v),
            other => Err(Error::Space(format!("{name}: expected integer, got {other:?}"))),
        }
    }

    pub fn str_value(&self, name: &str) -> Result<&str> {
        match self.values.get(name) {
            Some(ParamValue::Categorical(v)) => Ok(v),
            other => Err(Error::Space(format!("{name}: expected choice, got {other:?}"))),
        }
    }
}

/// Content checksum of a value map: first 16 hex digits of its SHA-256.
pub fn checksum_of(values: &BTreeMap<String, ParamValue>) -> String {
    let json = serde_json::to_string(values).expect("param values always serialize");
    let digest = Sha256::digest(json.as_bytes());
    let mut out = String::with_capacity(16);
    for byte in digest.iter().take(8) {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

impl ParamKind {
    /// Number of discrete bins, or `None` for continuous parameters.
    fn n_bins(&self) -> Option<usize> {
        match self {
            ParamKind::Categorical { choices } => Some(choices.len()),
            ParamKind::SteppedInt { values } => Some(values.len()),
            ParamKind::IntRange { lo, hi } => Some((hi - lo + 1) as usize),
            ParamKind::LogUniform { .. } => None,
        }
    }

    fn value_at(&self, index: usize) -> ParamValue {
        match self {
            ParamKind::Categorical { choices } => ParamValue::Categorical(choices[index].clone()),
            ParamKind::SteppedInt { values } => ParamValue::Int(values[index]),
            ParamKind::IntRange { lo, .. } => ParamValue::Int(lo + index as i64),
            ParamKind::LogUniform { .. } => unreachable!("continuous kinds have no bins"),
        }
    }

    fn index_of(&self, value: &ParamValue) -> Option<usize> {
        match (self, value) {
            (ParamKind::Categorical { choices }, ParamValue::Categorical(v)) => {
                choices.iter().position(|c| c == v)
            }
            (ParamKind::SteppedInt { values }, ParamValue::Int(v)) => {
                values.iter().position(|x| x == v)
            }
            (ParamKind::IntRange { lo, hi }, ParamValue::Int(v)) if lo <= v && v <= hi => {
                Some((v - lo) as usize)
            }
            _ => None,
        }
    }

    /// Map a coordinate in `[0,1]` to a concrete value.
    ///
    /// Discrete kinds snap to the nearest bin. Continuous kinds interpolate
    /// on the log scale, with the endpoints pinned to `lo` and `hi` and the
    /// result clamped into range so rounding can never escape the domain.
    pub fn decode_coord(&self, coord: f64) -> Result<ParamValue> {
        if !(0.0..=1.0).contains(&coord) {
            return Err(Error::Space(format!("coordinate {coord} outside [0,1]")));
        }
        match self {
            ParamKind::LogUniform { lo, hi } => Ok(ParamValue::Float(log_decode(*lo, *hi, coord))),
            _ => {
                let n = self.n_bins().expect("discrete kind") as f64;
                let index = ((coord * n).floor() as usize).min(self.n_bins().unwrap() - 1);
                Ok(self.value_at(index))
            }
        }
    }

    /// Map a concrete value to its coordinate in `[0,1]`.
    ///
    /// Discrete kinds return the bin center. For continuous kinds the
    /// coordinate is found by bisecting the bit-ordering of `[0,1]` against
    /// the (weakly monotone) decode map, which makes `decode(encode(v)) == v`
    /// hold bitwise for every value that decode can produce.
    pub fn encode_value(&self, value: &ParamValue) -> Result<f64> {
        match self {
            ParamKind::LogUniform { lo, hi } => match value {
                ParamValue::Float(v) if *v >= *lo && *v <= *hi => Ok(log_encode(*lo, *hi, *v)),
                other => Err(Error::Space(format!(
                    "value {other:?} outside log-uniform [{lo}, {hi}]"
                ))),
            },
            _ => {
                let index = self
                    .index_of(value)
                    .ok_or_else(|| Error::Space(format!("value {value:?} not in domain")))?;
                let n = self.n_bins().unwrap() as f64;
                Ok((index as f64 + 0.5) / n)
            }
        }
    }
}

fn log_decode(lo: f64, hi: f64, coord: f64) -> f64 {
    if coord == 0.0 {
        return lo;
    }
    if coord == 1.0 {
        return hi;
    }
    let v = (lo.ln() + coord * (hi.ln() - lo.ln())).exp();
    v.clamp(lo, hi)
}

/// Leftmost coordinate whose decode is `>= v`; exact inverse on decode's image.
fn log_encode(lo: f64, hi: f64, v: f64) -> f64 {
    if v <= lo {
        return 0.0;
    }
    if v >= hi {
        return 1.0;
    }
    // Bisect on the total order of non-negative f64 bit patterns.
    let mut left = 0u64; // 0.0
    let mut right = 1.0f64.to_bits();
    while left < right {
        let mid = left + (right - left) / 2;
        if log_decode(lo, hi, f64::from_bits(mid)) < v {
            left = mid + 1;
        } else {
            right = mid;
        }
    }
    f64::from_bits(left)
}

/// An ordered set of hyperparameter domains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub variant: SpaceVariant,
    pub params: Vec<ParamDescriptor>,
}

/// Build the search space for a variant.
pub fn define_space(variant: SpaceVariant) -> SearchSpace {
    let mut params = vec![
        ParamDescriptor {
            name: "optimizer".into(),
            kind: ParamKind::Categorical { choices: vec!["sgd".into(), "adam".into()] },
        },
        ParamDescriptor {
            name: "learning_rate".into(),
            kind: ParamKind::LogUniform { lo: 1e-4, hi: 0.05 },
        },
        ParamDescriptor {
            name: "l2".into(),
            kind: ParamKind::LogUniform { lo: 1e-5, hi: 5e-3 },
        },
        ParamDescriptor {
            name: "decay_every".into(),
            kind: ParamKind::SteppedInt { values: (1..=1000).map(|k| k * 100).collect() },
        },
        ParamDescriptor {
            name: "batch_size".into(),
            kind: ParamKind::SteppedInt { values: vec![4, 8, 16, 32, 64] },
        },
    ];
    match variant {
        SpaceVariant::S1 | SpaceVariant::S2FixedNopsRandomSigma => {}
        SpaceVariant::S2Full => {
            params.push(n_ops_descriptor());
            for op in AUG_OP_NAMES {
                params.push(ParamDescriptor {
                    name: format!("sigma_{op}"),
                    kind: ParamKind::LogUniform { lo: 1.0, hi: 25.0 },
                });
            }
        }
        SpaceVariant::S2SharedSigma => {
            params.push(n_ops_descriptor());
            params.push(ParamDescriptor {
                name: "sigma_common".into(),
                kind: ParamKind::LogUniform { lo: 1.0, hi: 25.0 },
            });
        }
    }
    SearchSpace { variant, params }
}

fn n_ops_descriptor() -> ParamDescriptor {
    ParamDescriptor { name: "n_ops".into(), kind: ParamKind::IntRange { lo: 1, hi: 10 } }
}

impl SearchSpace {
    /// Dimensionality of the unit-hypercube encoding.
    pub fn dim(&self) -> usize {
        self.params.len()
    }

    /// Check that a configuration belongs to this space.
    pub fn validate(&self, config: &Configuration) -> Result<()> {
        if config.space != self.variant {
            return Err(Error::Space(format!(
                "configuration is for {}, space is {}",
                config.space, self.variant
            )));
        }
        if config.values.len() != self.params.len() {
            return Err(Error::Space(format!(
                "expected {} parameters, got {}",
                self.params.len(),
                config.values.len()
            )));
        }
        self.encode(config).map(|_| ())
    }

    /// Draw one configuration uniformly (uniform per parameter: log-uniform
    /// on continuous ranges, uniform over bins otherwise).
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Configuration {
        let mut values = BTreeMap::new();
        for p in &self.params {
            let value = match &p.kind {
                ParamKind::LogUniform { .. } => {
                    p.kind.decode_coord(rng.random::<f64>()).expect("in range")
                }
                kind => {
                    let n = kind.n_bins().unwrap();
                    kind.value_at(rng.random_range(0..n))
                }
            };
            values.insert(p.name.clone(), value);
        }
        Configuration::new(self.variant, values)
    }

    /// Encode a configuration as a point in `[0,1]^d`.
    pub fn encode(&self, config: &Configuration) -> Result<UnitPoint> {
        if config.space != self.variant {
            return Err(Error::Space(format!(
                "configuration is for {}, space is {}",
                config.space, self.variant
            )));
        }
        self.params
            .iter()
            .map(|p| {
                let value = config
                    .values
                    .get(&p.name)
                    .ok_or_else(|| Error::Space(format!("missing parameter {}", p.name)))?;
                p.kind.encode_value(value)
            })
            .collect()
    }

    /// Decode a point in `[0,1]^d` into a configuration.
    pub fn decode(&self, point: &UnitPoint) -> Result<Configuration> {
        if point.len() != self.params.len() {
            return Err(Error::Space(format!(
                "point has {} dims, space has {}",
                point.len(),
                self.params.len()
            )));
        }
        let mut values = BTreeMap::new();
        for (p, &coord) in self.params.iter().zip(point) {
            values.insert(p.name.clone(), p.kind.decode_coord(coord)?);
        }
        Ok(Configuration::new(self.variant, values))
    }

    /// Rebuild a configuration from raw values (e.g. read back from a
    /// ledger), validating it against this space.
    pub fn config_from_values(&self, values: BTreeMap<String, ParamValue>) -> Result<Configuration> {
        let config = Configuration::new(self.variant, values);
        self.validate(&config)?;
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn lr_kind() -> ParamKind {
        ParamKind::LogUniform { lo: 1e-4, hi: 0.05 }
    }

    #[test]
    fn space_shapes() {
        assert_eq!(define_space(SpaceVariant::S1).dim(), 5);
        assert_eq!(define_space(SpaceVariant::S2Full).dim(), 16);
        assert_eq!(define_space(SpaceVariant::S2SharedSigma).dim(), 7);
        assert_eq!(define_space(SpaceVariant::S2FixedNopsRandomSigma).dim(), 5);

        let s1 = define_space(SpaceVariant::S1);
        assert_eq!(s1.params[1].name, "learning_rate");
        match &s1.params[1].kind {
            ParamKind::LogUniform { lo, hi } => {
                assert_eq!(*lo, 1e-4);
                assert_eq!(*hi, 0.05);
            }
            other => panic!("unexpected kind {other:?}"),
        }
        match &s1.params[3].kind {
            ParamKind::SteppedInt { values } => {
                assert_eq!(values.len(), 1000);
                assert_eq!(values[0], 100);
                assert_eq!(*values.last().unwrap(), 100_000);
            }
            other => panic!("unexpected kind {other:?}"),
        }
    }

    #[test]
    fn endpoint_coordinates() {
        let kind = lr_kind();
        assert_eq!(kind.encode_value(&ParamValue::Float(1e-4)).unwrap(), 0.0);
        assert_eq!(kind.encode_value(&ParamValue::Float(0.05)).unwrap(), 1.0);
        assert_eq!(kind.decode_coord(0.0).unwrap(), ParamValue::Float(1e-4));
        assert_eq!(kind.decode_coord(1.0).unwrap(), ParamValue::Float(0.05));
    }

    #[test]
    fn midpoint_is_geometric_mean() {
        // Analytic midpoint of log-uniform [1e-4, 0.05] is sqrt(5e-6).
        let kind = lr_kind();
        match kind.decode_coord(0.5).unwrap() {
            ParamValue::Float(v) => assert!((v - 2.236_067_977_499_79e-3).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn batch_size_bin_centers() {
        let kind = ParamKind::SteppedInt { values: vec![4, 8, 16, 32, 64] };
        assert_eq!(kind.encode_value(&ParamValue::Int(4)).unwrap(), 0.1);
        assert_eq!(kind.encode_value(&ParamValue::Int(64)).unwrap(), 0.9);
        assert_eq!(kind.decode_coord(0.1).unwrap(), ParamValue::Int(4));
        assert_eq!(kind.decode_coord(0.9).unwrap(), ParamValue::Int(64));
        // Snapping: anything in the last fifth maps to 64.
        assert_eq!(kind.decode_coord(0.81).unwrap(), ParamValue::Int(64));
        assert_eq!(kind.decode_coord(0.99).unwrap(), ParamValue::Int(64));
    }

    #[test]
    fn sample_medians_and_fractions() {
        let space = define_space(SpaceVariant::S1);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let n = 10_000;
        let mut lrs = Vec::with_capacity(n);
        let mut sgd = 0usize;
        for _ in 0..n {
            let c = space.sample_uniform(&mut rng);
            lrs.push(c.f64_value("learning_rate").unwrap());
            if c.str_value("optimizer").unwrap() == "sgd" {
                sgd += 1;
            }
        }
        lrs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = lrs[n / 2];
        // Log-uniform median sqrt(1e-4 * 0.05) with sampling slack.
        assert!((1.8e-3..=2.7e-3).contains(&median), "median {median}");
        let frac = sgd as f64 / n as f64;
        assert!((0.46..=0.54).contains(&frac), "sgd fraction {frac}");
    }

    #[test]
    fn sampled_values_respect_bounds() {
        let space = define_space(SpaceVariant::S2Full);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..2000 {
            let c = space.sample_uniform(&mut rng);
            let lr = c.f64_value("learning_rate").unwrap();
            assert!((1e-4..=0.05).contains(&lr));
            let l2 = c.f64_value("l2").unwrap();
            assert!((1e-5..=5e-3).contains(&l2));
            let n_ops = c.i64_value("n_ops").unwrap();
            assert!((1..=10).contains(&n_ops));
            for op in AUG_OP_NAMES {
                let s = c.f64_value(&format!("sigma_{op}")).unwrap();
                assert!((1.0..=25.0).contains(&s));
            }
            let de = c.i64_value("decay_every").unwrap();
            assert!(de % 100 == 0 && (100..=100_000).contains(&de));
            let bs = c.i64_value("batch_size").unwrap();
            assert!([4, 8, 16, 32, 64].contains(&bs));
        }
    }

    #[test]
    fn roundtrip_is_exact_for_all_variants() {
        for variant in [
            SpaceVariant::S1,
            SpaceVariant::S2Full,
            SpaceVariant::S2SharedSigma,
            SpaceVariant::S2FixedNopsRandomSigma,
        ] {
            let space = define_space(variant);
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            for i in 0..1000 {
                let c = space.sample_uniform(&mut rng);
                let point = space.encode(&c).unwrap();
                assert_eq!(point.len(), space.dim());
                assert!(point.iter().all(|x| (0.0..=1.0).contains(x)));
                let back = space.decode(&point).unwrap();
                assert_eq!(back, c, "variant {variant} sample {i}");
            }
        }
    }

    #[test]
    fn decode_rejects_out_of_range() {
        let space = define_space(SpaceVariant::S1);
        let mut bad = vec![0.5; 5];
        bad[1] = 1.5;
        assert!(space.decode(&bad).is_err());
        assert!(space.decode(&vec![0.5; 4]).is_err());
    }

    #[test]
    fn canonical_json_is_key_sorted_and_stable() {
        let space = define_space(SpaceVariant::S1);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let c = space.sample_uniform(&mut rng);
        let json = c.canonical_json();
        let keys: Vec<&str> = ["batch_size", "decay_every", "l2", "learning_rate", "optimizer"]
            .to_vec();
        let mut last = 0;
        for k in keys {
            let pos = json.find(&format!("\"{k}\"")).expect("key present");
            assert!(pos >= last, "keys not sorted in {json}");
            last = pos;
        }
        // The checksum is a pure function of the values.
        let c2: Configuration = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(checksum_of(&c2.values), c.id);
    }

    #[test]
    fn untagged_value_json_roundtrip_preserves_types() {
        let vals = vec![
            ParamValue::Categorical("adam".into()),
            ParamValue::Int(200),
            ParamValue::Float(3.0),
            ParamValue::Float(2.236e-3),
        ];
        let json = serde_json::to_string(&vals).unwrap();
        let back: Vec<ParamValue> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, vals);
    }
}
