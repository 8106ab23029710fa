//! Discrete ordinal populations used by the simulations and their samplers.

use std::fmt;
use std::io;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::probability::{acl_probs, BiasVector, Pmf, PROB_TIE_TOL};

/// Label permutation of the almost non-unimodal family (K = 10).
pub const NON_UNIMODAL_PERMUTATION: [usize; 10] = [1, 10, 2, 9, 3, 8, 4, 7, 5, 6];

/// `ã_i = ((i - 1)K/(N - 1) - 1)Δ` for `i = 1..=N`.
pub fn latent_grid(num_points: usize, delta: f64, num_classes: usize) -> Result<Vec<f64>> {
    if num_points < 2 {
        return Err(Error::InvalidArgument(format!("grid needs N >= 2, got {num_points}")));
    }
    let k = num_classes as f64;
    let span = (num_points - 1) as f64;
    Ok((0..num_points).map(|i| (i as f64 * k / span - 1.0) * delta).collect())
}

/// The five simulation families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum FamilyKind {
    /// Homoscedastic unimodal: ACL with the equal-interval bias.
    H { delta: f64 },
    /// ACL with the acute (unequal-interval) bias.
    M { delta: f64 },
    /// ACL with the grave (swapped) bias; partly non-unimodal.
    A { delta: f64 },
    /// Two halves with different scales.
    O { delta1: f64, delta2: f64 },
    /// Almost non-unimodal: permuted labels of H.
    N { delta: f64 },
}

impl FamilyKind {
    /// The 15 families of the simulation grid.
    pub fn simulation_grid() -> Vec<FamilyKind> {
        let deltas = [1.0 / 3.0, 1.0, 3.0];
        let mut out = Vec::with_capacity(15);
        out.extend(deltas.iter().map(|&delta| FamilyKind::H { delta }));
        out.extend(deltas.iter().map(|&delta| FamilyKind::M { delta }));
        out.extend(deltas.iter().map(|&delta| FamilyKind::A { delta }));
        for (delta1, delta2) in [(1.0 / 3.0, 1.0), (1.0 / 3.0, 3.0), (1.0, 3.0)] {
            out.push(FamilyKind::O { delta1, delta2 });
        }
        out.extend(deltas.iter().map(|&delta| FamilyKind::N { delta }));
        out
    }

    pub fn letter(&self) -> char {
        match self {
            FamilyKind::H { .. } => 'H',
            FamilyKind::M { .. } => 'M',
            FamilyKind::A { .. } => 'A',
            FamilyKind::O { .. } => 'O',
            FamilyKind::N { .. } => 'N',
        }
    }
}

fn format_delta(d: f64) -> String {
    let thirds = d * 3.0;
    if (d - d.round()).abs() < 1e-12 {
        format!("{}", d.round() as i64)
    } else if (thirds - thirds.round()).abs() < 1e-12 {
        format!("{}/3", thirds.round() as i64)
    } else {
        format!("{d}")
    }
}

fn parse_delta(s: &str) -> Result<f64> {
    let bad = || Error::Parse(format!("scale '{s}'"));
    let v = match s.split_once('/') {
        Some((n, d)) => {
            let n: f64 = n.parse().map_err(|_| bad())?;
            let d: f64 = d.parse().map_err(|_| bad())?;
            n / d
        }
        None => s.parse().map_err(|_| bad())?,
    };
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(bad())
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            FamilyKind::O { delta1, delta2 } => {
                write!(f, "O-{}-{}", format_delta(delta1), format_delta(delta2))
            }
            FamilyKind::H { delta } | FamilyKind::M { delta } | FamilyKind::A { delta } | FamilyKind::N { delta } => {
                write!(f, "{}-{}", self.letter(), format_delta(delta))
            }
        }
    }
}

impl FromStr for FamilyKind {
    type Err = Error;

    /// Parses names like `H-1/3` or `O-1-3`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split('-').collect();
        match parts.as_slice() {
            ["O", d1, d2] => Ok(FamilyKind::O {
                delta1: parse_delta(d1)?,
                delta2: parse_delta(d2)?,
            }),
            [letter, d] => {
                let delta = parse_delta(d)?;
                match *letter {
                    "H" => Ok(FamilyKind::H { delta }),
                    "M" => Ok(FamilyKind::M { delta }),
                    "A" => Ok(FamilyKind::A { delta }),
                    "N" => Ok(FamilyKind::N { delta }),
                    _ => Err(Error::Parse(format!("distribution '{s}'"))),
                }
            }
            _ => Err(Error::Parse(format!("distribution '{s}'"))),
        }
    }
}

/// A family together with its label count and support size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistributionFamily {
    #[serde(flatten)]
    pub kind: FamilyKind,
    #[serde(rename = "K")]
    pub num_classes: usize,
    #[serde(rename = "N")]
    pub num_points: usize,
}

impl DistributionFamily {
    pub const STANDARD_CLASSES: usize = 10;
    pub const STANDARD_POINTS: usize = 100;

    /// `K = 10`, `N = 100`.
    pub fn standard(kind: FamilyKind) -> Self {
        Self {
            kind,
            num_classes: Self::STANDARD_CLASSES,
            num_points: Self::STANDARD_POINTS,
        }
    }

    /// Support positions; the offset variant shifts the second half of the
    /// O family by `KΔ₁ + Δ₂` so the halves do not overlap.
    pub fn support(&self, offset_variant: bool) -> Result<Vec<f64>> {
        let (n, k) = (self.num_points, self.num_classes);
        match self.kind {
            FamilyKind::O { delta1, delta2 } => {
                let half = self.half_points()?;
                let mut out = latent_grid(half, delta1, k)?;
                let shift = if offset_variant {
                    k as f64 * delta1 + delta2
                } else {
                    0.0
                };
                out.extend(latent_grid(half, delta2, k)?.into_iter().map(|u| u + shift));
                Ok(out)
            }
            FamilyKind::H { delta } | FamilyKind::M { delta } | FamilyKind::A { delta } | FamilyKind::N { delta } => {
                latent_grid(n, delta, k)
            }
        }
    }

    fn half_points(&self) -> Result<usize> {
        if !self.num_points.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "family O needs an even N, got {}",
                self.num_points
            )));
        }
        Ok(self.num_points / 2)
    }
}

impl fmt::Display for DistributionFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.kind.fmt(f)
    }
}

/// `N` support points, each with a label distribution and a weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteOrdinalDistribution {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<DistributionFamily>,
    support: Vec<f64>,
    cpds: Vec<Pmf>,
    weights: Vec<f64>,
}

impl DiscreteOrdinalDistribution {
    pub fn new(support: Vec<f64>, cpds: Vec<Pmf>, weights: Vec<f64>) -> Result<Self> {
        let n = support.len();
        if n == 0 {
            return Err(Error::InvalidArgument("empty support".into()));
        }
        if cpds.len() != n || weights.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "support {n}, cpds {}, weights {}",
                cpds.len(),
                weights.len()
            )));
        }
        let k = cpds[0].num_classes();
        if cpds.iter().any(|p| p.num_classes() != k) {
            return Err(Error::DimensionMismatch("cpds disagree on K".into()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidArgument("weights must be finite and >= 0".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("weights sum to {total}, not 1")));
        }
        Ok(Self {
            family: None,
            support,
            cpds,
            weights,
        })
    }

    /// Uniformly weighted population.
    pub fn uniform(support: Vec<f64>, cpds: Vec<Pmf>) -> Result<Self> {
        let w = 1.0 / support.len() as f64;
        let n = support.len();
        Self::new(support, cpds, vec![w; n])
    }

    pub fn num_points(&self) -> usize {
        self.support.len()
    }

    pub fn num_classes(&self) -> usize {
        self.cpds[0].num_classes()
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn cpds(&self) -> &[Pmf] {
        &self.cpds
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.cpds[i].probs()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Marginal label distribution `Pr(Y = y)`.
    pub fn marginal(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.num_classes()];
        for (p, w) in self.cpds.iter().zip(&self.weights) {
            for (mk, pk) in m.iter_mut().zip(p.probs()) {
                *mk += w * pk;
            }
        }
        m
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let d: Self = serde_json::from_str(s)?;
        let family = d.family;
        let mut checked = Self::new(d.support, d.cpds, d.weights)?;
        checked.family = family;
        Ok(checked)
    }
}

fn row_probs(kind: &FamilyKind, u: f64, b: &[f64]) -> Vec<f64> {
    let p = acl_probs(u, b);
    match kind {
        FamilyKind::N { .. } => NON_UNIMODAL_PERMUTATION.iter().map(|&j| p[j - 1]).collect(),
        _ => p,
    }
}

/// Builds the population of a simulation family.
pub fn build_distribution(fam: &DistributionFamily) -> Result<DiscreteOrdinalDistribution> {
    let k = fam.num_classes;
    let support = fam.support(false)?;
    let rows: Vec<Vec<f64>> = match fam.kind {
        FamilyKind::H { delta } => {
            let b = BiasVector::equal_interval(delta, k)?;
            support.iter().map(|&u| row_probs(&fam.kind, u, b.values())).collect()
        }
        FamilyKind::M { delta } => {
            let b = BiasVector::unequal_interval(delta, k)?;
            support.iter().map(|&u| row_probs(&fam.kind, u, b.values())).collect()
        }
        FamilyKind::A { delta } => {
            let b = BiasVector::swapped_interval(delta, k)?;
            support.iter().map(|&u| row_probs(&fam.kind, u, b.values())).collect()
        }
        FamilyKind::N { delta } => {
            if k != NON_UNIMODAL_PERMUTATION.len() {
                return Err(Error::InvalidArgument(format!("family N needs K = 10, got {k}")));
            }
            let b = BiasVector::equal_interval(delta, k)?;
            support.iter().map(|&u| row_probs(&fam.kind, u, b.values())).collect()
        }
        FamilyKind::O { delta1, delta2 } => {
            let half = fam.half_points()?;
            let b1 = BiasVector::equal_interval(delta1, k)?;
            let b2 = BiasVector::equal_interval(delta2, k)?;
            support
                .iter()
                .enumerate()
                .map(|(i, &u)| {
                    let b = if i < half { &b1 } else { &b2 };
                    row_probs(&fam.kind, u, b.values())
                })
                .collect()
        }
    };
    let cpds = rows.into_iter().map(Pmf::new).collect::<Result<Vec<_>>>()?;
    let mut dist = DiscreteOrdinalDistribution::uniform(support, cpds)?;
    dist.family = Some(*fam);
    Ok(dist)
}

/// One observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub x: f64,
    pub y: usize,
}

/// Generator for trial `trial` of a seeded experiment: one ChaCha8 seed,
/// one stream per trial.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Inverse-CDF draw of a 1-based label; boundary ties go to the lower label
/// with positive mass.
pub fn sample_label<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (k, p) in probs.iter().enumerate() {
        acc += p;
        if u <= acc && *p > 0.0 {
            return k + 1;
        }
    }
    // Rounding left the total slightly below 1: return the last label with mass.
    probs.iter().rposition(|&p| p > PROB_TIE_TOL).unwrap_or(probs.len() - 1) + 1
}

/// Draws `n` pairs with `x` uniform over the family's support.
pub fn sample_dataset(fam: &DistributionFamily, n: usize, seed: u64, offset_variant: bool) -> Result<Vec<Sample>> {
    sample_dataset_with(fam, n, &mut trial_rng(seed, 0), offset_variant)
}

pub fn sample_dataset_with<R: Rng + ?Sized>(
    fam: &DistributionFamily,
    n: usize,
    rng: &mut R,
    offset_variant: bool,
) -> Result<Vec<Sample>> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample size must be >= 1".into()));
    }
    let dist = build_distribution(fam)?;
    let xs = fam.support(offset_variant)?;
    Ok((0..n)
        .map(|_| {
            let i = rng.gen_range(0..xs.len());
            Sample {
                x: xs[i],
                y: sample_label(dist.row(i), rng),
            }
        })
        .collect())
}

pub fn write_dataset_csv<W: io::Write>(w: W, data: &[Sample]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for s in data {
        wr.serialize(s)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_dataset_csv<R: io::Read>(r: R) -> Result<Vec<Sample>> {
    csv::Reader::from_reader(r)
        .deserialize()
        .map(|rec| rec.map_err(Error::from))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_endpoints() {
        let g = latent_grid(100, 1.0, 10).unwrap();
        assert_eq!(g[0], -1.0);
        assert!((g[99] - 9.0).abs() < 1e-12);
        assert!((g[49] - (49.0 * 10.0 / 99.0 - 1.0)).abs() < 1e-12);
        assert!((g[49] - 3.949_494_949_494_95).abs() < 1e-12);
        assert!(latent_grid(1, 1.0, 10).is_err());
    }

    #[test]
    fn family_names_round_trip() {
        for kind in FamilyKind::simulation_grid() {
            assert_eq!(kind.to_string().parse::<FamilyKind>().unwrap(), kind);
        }
        assert_eq!(FamilyKind::H { delta: 1.0 / 3.0 }.to_string(), "H-1/3");
        assert_eq!(
            FamilyKind::O {
                delta1: 1.0,
                delta2: 3.0
            }
            .to_string(),
            "O-1-3"
        );
        assert!("Q-1".parse::<FamilyKind>().is_err());
        assert!("H-0".parse::<FamilyKind>().is_err());
    }

    #[test]
    fn h_rows_are_acl() {
        let fam = DistributionFamily::standard(FamilyKind::H { delta: 1.0 });
        let d = build_distribution(&fam).unwrap();
        let b = BiasVector::equal_interval(1.0, 10).unwrap();
        for i in [0, 17, 99] {
            let expected = crate::probability::acl_pmf(d.support()[i], &b);
            assert_eq!(d.row(i), expected.probs());
        }
        assert!(d.cpds().iter().all(Pmf::is_unimodal));
    }

    #[test]
    fn n_rows_are_permuted() {
        let fam = DistributionFamily::standard(FamilyKind::N { delta: 1.0 });
        let n = build_distribution(&fam).unwrap();
        let h = build_distribution(&DistributionFamily::standard(FamilyKind::H { delta: 1.0 })).unwrap();
        for i in 0..100 {
            // π(2) = 10
            assert_eq!(n.row(i)[1], h.row(i)[9]);
            assert!((n.row(i).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn o_halves_and_odd_n() {
        let fam = DistributionFamily::standard(FamilyKind::O {
            delta1: 1.0 / 3.0,
            delta2: 3.0,
        });
        let d = build_distribution(&fam).unwrap();
        let first: f64 = d.weights()[..50].iter().sum();
        assert!((first - 0.5).abs() < 1e-12);
        assert_eq!(d.support()[0], -1.0 / 3.0);
        assert_eq!(d.support()[50], -3.0);
        let odd = DistributionFamily { num_points: 99, ..fam };
        assert!(build_distribution(&odd).is_err());
        let shifted = fam.support(true).unwrap();
        assert!((shifted[50] - (-3.0 + 10.0 / 3.0 + 3.0)).abs() < 1e-12);
        assert!(shifted[49] < shifted[50]);
    }

    #[test]
    fn json_round_trip() {
        let fam = DistributionFamily::standard(FamilyKind::M { delta: 3.0 });
        let d = build_distribution(&fam).unwrap();
        let s = d.to_json().unwrap();
        assert!(s.contains("\"K\": 10"));
        let back = DiscreteOrdinalDistribution::from_json(&s).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn sampling_is_deterministic() {
        let fam = DistributionFamily::standard(FamilyKind::H { delta: 3.0 });
        let a = sample_dataset(&fam, 500, 7, false).unwrap();
        let b = sample_dataset(&fam, 500, 7, false).unwrap();
        assert_eq!(a, b);
        let c = sample_dataset(&fam, 500, 8, false).unwrap();
        assert_ne!(a, c);
        let mut buf = Vec::new();
        write_dataset_csv(&mut buf, &a).unwrap();
        assert!(buf.starts_with(b"x,y\n"));
        assert_eq!(read_dataset_csv(buf.as_slice()).unwrap(), a);
    }

    #[test]
    fn trial_streams_differ() {
        let mut r0 = trial_rng(1, 0);
        let mut r1 = trial_rng(1, 1);
        assert_ne!(r0.gen::<u64>(), r1.gen::<u64>());
    }

    #[test]
    fn label_frequencies_match_row() {
        let fam = DistributionFamily::standard(FamilyKind::H { delta: 1.0 });
        let d = build_distribution(&fam).unwrap();
        let row = d.row(40);
        let n = 100_000;
        let mut rng = trial_rng(3, 0);
        let mut counts = [0usize; 10];
        for _ in 0..n {
            counts[sample_label(row, &mut rng) - 1] += 1;
        }
        for (c, p) in counts.iter().zip(row) {
            let sd = (n as f64 * p * (1.0 - p)).sqrt();
            assert!((*c as f64 - n as f64 * p).abs() <= 3.0 * sd + 1.0, "{c} vs {p}");
        }
    }

    #[test]
    fn boundary_draw_goes_low() {
        struct Fixed;
        impl rand::RngCore for Fixed {
            fn next_u32(&mut self) -> u32 {
                0
            }
            fn next_u64(&mut self) -> u64 {
                0
            }
            fn fill_bytes(&mut self, dest: &mut [u8]) {
                dest.fill(0)
            }
            fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
                dest.fill(0);
                Ok(())
            }
        }
        // u = 0 sits on the boundary of a zero-mass first label.
        assert_eq!(sample_label(&[0.0, 0.5, 0.5], &mut Fixed), 2);
        assert_eq!(sample_label(&[0.5, 0.5, 0.0], &mut Fixed), 1);
    }
}
