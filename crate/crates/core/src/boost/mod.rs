//! AdaBoost.R2 regression over depth-limited trees, one ensemble per BP target.

mod adaboost;
mod tree;

use std::fmt::Write as _;

pub use adaboost::{
    adaboost_fit, adaboost_fit_with, drucker_update, weighted_bootstrap, weighted_median, BoostParams, FitTrace,
    FittedBoost, Loss, RoundOutcome, RoundRecord, RoundUpdate, BETA_FLOOR,
};
pub use tree::{tree_fit, Node, RegressionTree};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, RNG_ALGORITHM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Target {
    Dbp,
    Map,
    Sbp,
}

impl Target {
    pub const ALL: [Target; 3] = [Target::Dbp, Target::Map, Target::Sbp];

    pub fn name(self) -> &'static str {
        match self {
            Target::Dbp => "DBP",
            Target::Map => "MAP",
            Target::Sbp => "SBP",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl std::str::FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "DBP" => Ok(Target::Dbp),
            "MAP" => Ok(Target::Map),
            "SBP" => Ok(Target::Sbp),
            other => Err(Error::Parse(format!("unknown target `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoostEnsemble {
    pub target: Target,
    pub learners: Vec<RegressionTree>,
    /// Per-learner confidence, each in `(0, 1)`.
    pub betas: Vec<f64>,
    pub params: BoostParams,
    pub seed: u64,
}

impl BoostEnsemble {
    pub fn rounds_completed(&self) -> usize {
        self.learners.len()
    }

    pub fn from_fit(target: Target, fit: FittedBoost, params: BoostParams, seed: u64) -> Self {
        Self { target, learners: fit.learners, betas: fit.betas, params, seed }
    }

    /// Text block: `target,T,depth,min_leaf,seed`, a `loss,rng,rounds` line,
    /// one preorder node dump per learner and the beta list.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let p = &self.params;
        let _ = writeln!(s, "{},{},{},{},{}", self.target.name(), p.rounds, p.max_depth, p.min_leaf, self.seed);
        let _ = writeln!(s, "{},{},{}", p.loss.name(), RNG_ALGORITHM, self.rounds_completed());
        for t in &self.learners {
            let _ = writeln!(s, "tree,{}", t.nodes.len());
            write_preorder(&mut s, &t.nodes, 0);
        }
        let betas: Vec<String> = self.betas.iter().map(|b| format!("{b:e}")).collect();
        let _ = writeln!(s, "betas,{}", betas.join(","));
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        parse_ensemble(&mut lines)
    }
}

fn write_preorder(s: &mut String, nodes: &[Node], at: usize) {
    match nodes[at] {
        Node::Leaf { value } => {
            let _ = writeln!(s, "L,{value:e}");
        }
        Node::Split { feature, threshold, left, right } => {
            let _ = writeln!(s, "S,{feature},{threshold:e}");
            write_preorder(s, nodes, left);
            write_preorder(s, nodes, right);
        }
    }
}

fn parse_err(m: impl Into<String>) -> Error {
    Error::Parse(format!("ensemble: {}", m.into()))
}

fn parse_ensemble<'a, I: Iterator<Item = &'a str>>(lines: &mut I) -> Result<BoostEnsemble> {
    let header = lines.next().ok_or_else(|| parse_err("missing header"))?;
    let h: Vec<&str> = header.split(',').collect();
    if h.len() != 5 {
        return Err(parse_err(format!("bad header `{header}`")));
    }
    let num = |s: &str| s.parse::<u64>().map_err(|_| parse_err(format!("bad number `{s}`")));
    let target: Target = h[0].parse()?;
    let rounds = num(h[1])? as usize;
    let max_depth = num(h[2])? as usize;
    let min_leaf = num(h[3])? as usize;
    let seed = num(h[4])?;
    let meta = lines.next().ok_or_else(|| parse_err("missing meta line"))?;
    let m: Vec<&str> = meta.split(',').collect();
    if m.len() != 3 {
        return Err(parse_err(format!("bad meta line `{meta}`")));
    }
    let loss: Loss = m[0].parse()?;
    let completed = num(m[2])? as usize;

    let mut learners = Vec::with_capacity(completed);
    for _ in 0..completed {
        let line = lines.next().ok_or_else(|| parse_err("missing tree"))?;
        let count: usize = line
            .strip_prefix("tree,")
            .and_then(|c| c.parse().ok())
            .ok_or_else(|| parse_err(format!("bad tree line `{line}`")))?;
        let raw: Vec<&str> = (0..count)
            .map(|_| lines.next().ok_or_else(|| parse_err("truncated tree")))
            .collect::<Result<_>>()?;
        let mut nodes = Vec::with_capacity(count);
        let mut pos = 0;
        read_preorder(&raw, &mut pos, &mut nodes)?;
        if pos != count {
            return Err(parse_err("tree node count mismatch"));
        }
        learners.push(RegressionTree { nodes, max_depth, min_leaf });
    }
    let betas_line = lines.next().ok_or_else(|| parse_err("missing betas"))?;
    let betas = betas_line
        .strip_prefix("betas")
        .ok_or_else(|| parse_err("bad betas line"))?
        .split(',')
        .filter(|s| !s.is_empty())
        .map(|b| b.parse::<f64>().map_err(|_| parse_err(format!("bad beta `{b}`"))))
        .collect::<Result<Vec<f64>>>()?;
    if betas.len() != learners.len() {
        return Err(parse_err("beta count differs from learner count"));
    }
    Ok(BoostEnsemble { target, learners, betas, params: BoostParams { rounds, max_depth, min_leaf, loss }, seed })
}

fn read_preorder(raw: &[&str], pos: &mut usize, nodes: &mut Vec<Node>) -> Result<usize> {
    let line = raw.get(*pos).ok_or_else(|| parse_err("truncated tree"))?;
    *pos += 1;
    let at = nodes.len();
    let f: Vec<&str> = line.split(',').collect();
    match f.as_slice() {
        ["L", v] => {
            let value = v.parse().map_err(|_| parse_err(format!("bad leaf `{line}`")))?;
            nodes.push(Node::Leaf { value });
        }
        ["S", feat, thr] => {
            let feature = feat.parse().map_err(|_| parse_err(format!("bad split `{line}`")))?;
            let threshold = thr.parse().map_err(|_| parse_err(format!("bad split `{line}`")))?;
            nodes.push(Node::Leaf { value: 0.0 });
            let left = read_preorder(raw, pos, nodes)?;
            let right = read_preorder(raw, pos, nodes)?;
            nodes[at] = Node::Split { feature, threshold, left, right };
        }
        _ => return Err(parse_err(format!("bad node `{line}`"))),
    }
    Ok(at)
}

/// Serialize several ensembles back to back.
pub fn ensembles_to_text(models: &[BoostEnsemble]) -> String {
    models.iter().map(BoostEnsemble::to_text).collect()
}

pub fn ensembles_from_text(text: &str) -> Result<Vec<BoostEnsemble>> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty()).peekable();
    let mut out = Vec::new();
    while lines.peek().is_some() {
        out.push(parse_ensemble(&mut lines)?);
    }
    Ok(out)
}

pub fn adaboost_predict(model: &BoostEnsemble, x: &[f64]) -> Result<f64> {
    if model.learners.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let preds: Vec<f64> = model.learners.iter().map(|t| t.predict(x)).collect();
    let weights: Vec<f64> = model.betas.iter().map(|b| (1.0 / b).ln()).collect();
    Ok(weighted_median(&preds, &weights))
}

/// Seed of the ensemble for `target` under root `seed`.
pub fn target_seed(seed: u64, target: Target) -> u64 {
    derive_seed(seed, 0x7A46 + target.index() as u64)
}

/// Fit the DBP, MAP and SBP ensembles independently, each on its own seed
/// stream. `labels` is indexed by [`Target::index`].
pub fn train_targets(
    features: &[Vec<f64>],
    labels: [&[f64]; 3],
    params: &BoostParams,
    seed: u64,
) -> Result<[BoostEnsemble; 3]> {
    if features.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let fits: Vec<Result<BoostEnsemble>> = std::thread::scope(|scope| {
        let handles: Vec<_> = Target::ALL
            .iter()
            .map(|&target| {
                let y = labels[target.index()];
                scope.spawn(move || {
                    let s = target_seed(seed, target);
                    adaboost_fit(features, y, params, s).map(|fit| BoostEnsemble::from_fit(target, fit, *params, s))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("training thread panicked")).collect()
    });
    let mut it = fits.into_iter();
    Ok([it.next().unwrap()?, it.next().unwrap()?, it.next().unwrap()?])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> (Vec<Vec<f64>>, Vec<f64>) {
        let x: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64 / 4.0, ((i * 7) % 11) as f64]).collect();
        let y: Vec<f64> = x.iter().map(|r| 80.0 + 3.0 * r[0] + (r[1] * 0.7).sin() * 5.0).collect();
        (x, y)
    }

    #[test]
    fn text_round_trip() {
        let (x, y) = toy();
        let params = BoostParams { rounds: 5, max_depth: 3, min_leaf: 2, loss: Loss::Linear };
        let fit = adaboost_fit(&x, &y, &params, 9).unwrap();
        let m = BoostEnsemble::from_fit(Target::Map, fit, params, 9);
        let back = BoostEnsemble::from_text(&m.to_text()).unwrap();
        assert_eq!(back, m);
        let both = ensembles_from_text(&ensembles_to_text(&[m.clone(), m.clone()])).unwrap();
        assert_eq!(both.len(), 2);
    }

    #[test]
    fn train_targets_is_deterministic() {
        let (x, y) = toy();
        let y2: Vec<f64> = y.iter().map(|v| v + 20.0).collect();
        let y3: Vec<f64> = y.iter().map(|v| v * 1.5).collect();
        let params = BoostParams { rounds: 8, ..BoostParams::default() };
        let a = train_targets(&x, [&y, &y2, &y3], &params, 77).unwrap();
        let b = train_targets(&x, [&y, &y2, &y3], &params, 77).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[0].target, Target::Dbp);
        assert_ne!(a[0].seed, a[1].seed);
    }

    #[test]
    fn empty_ensemble_predict() {
        let m = BoostEnsemble {
            target: Target::Dbp,
            learners: vec![],
            betas: vec![],
            params: BoostParams::default(),
            seed: 0,
        };
        assert!(matches!(adaboost_predict(&m, &[0.0]), Err(Error::EmptyEnsemble)));
    }
}
