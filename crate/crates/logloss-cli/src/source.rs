//! Input ingestion: joint pmf files, built-in generators, odds tables, and
//! stored set functions.

use std::path::{Path, PathBuf};

use logloss_regions::ceo::CeoInstance;
use logloss_regions::gambling::RaceSpec;
use logloss_regions::polytope::SetFunction;
use logloss_regions::sources;
use logloss_regions::{Alphabet, JointPmf};
use serde::Deserialize;

use crate::CliError;

#[derive(Deserialize)]
struct AxisDoc {
    name: String,
    size: usize,
}

#[derive(Deserialize)]
struct PmfDoc {
    axes: Vec<AxisDoc>,
    probs: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OddsDoc {
    Bare(Vec<f64>),
    Keyed { odds: Vec<f64> },
}

#[derive(Deserialize)]
struct SetFunctionDoc {
    m: usize,
    values: Vec<f64>,
}

/// Source selection shared by the sweep commands. Exactly one selector is
/// accepted.
#[derive(clap::Args)]
pub struct SourceArgs {
    /// Joint pmf file: JSON {"axes":[{"name":...,"size":...},...],"probs":[...]}
    /// with probabilities in row-major axis order. Two axes named Y1, Y2
    /// describe an observation pair; a leading axis X describes a hidden
    /// source with its observations.
    #[arg(long, value_name = "FILE")]
    pub source: Option<PathBuf>,

    /// Built-in source: dsbs:<alpha>, bsc-ceo:<alpha>, or uniform:<n>.
    #[arg(long = "gen", value_name = "SPEC", conflicts_with = "source")]
    pub generator: Option<String>,

    /// Shorthand for --gen bsc-ceo:<alpha>.
    #[arg(long, conflicts_with_all = ["source", "generator"])]
    pub alpha: Option<f64>,
}

/// A loaded source, either an observation pair or a full hidden-source
/// instance.
pub enum Loaded {
    Pair(JointPmf),
    Instance(CeoInstance),
}

impl Loaded {
    /// The two-axis observation joint, required by the direct-distortion
    /// commands.
    pub fn into_pair(self) -> Result<JointPmf, CliError> {
        match self {
            Loaded::Pair(p) => Ok(p),
            Loaded::Instance(_) => Err(CliError::Input(
                "this command needs a two-axis observation joint (axes Y1, Y2), \
                 not a hidden-source instance"
                    .into(),
            )),
        }
    }

    /// The hidden-source instance; an observation pair becomes its own
    /// complete-observation instance.
    pub fn into_instance(self) -> Result<CeoInstance, CliError> {
        match self {
            Loaded::Pair(p) => CeoInstance::from_pair(&p).map_err(CliError::input),
            Loaded::Instance(i) => Ok(i),
        }
    }
}

pub fn load(args: &SourceArgs) -> Result<Loaded, CliError> {
    if let Some(path) = &args.source {
        return load_pmf_file(path);
    }
    let spec = match (&args.generator, args.alpha) {
        (Some(s), _) => s.clone(),
        (None, Some(a)) => format!("bsc-ceo:{a}"),
        (None, None) => {
            return Err(CliError::Input(
                "no source given; pass --source <file>, --gen <spec>, or --alpha <a>".into(),
            ))
        }
    };
    generate(&spec)
}

fn load_pmf_file(path: &Path) -> Result<Loaded, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let doc: PmfDoc = serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("{} is not a pmf document: {e}", path.display())))?;
    let axes: Vec<Alphabet> =
        doc.axes.iter().map(|a| Alphabet::new(a.name.clone(), a.size)).collect();
    let joint = JointPmf::new(axes, doc.probs).map_err(CliError::input)?;
    let names: Vec<&str> = joint.axes().iter().map(|a| a.name.as_str()).collect();
    if names.first() == Some(&"X") && names.len() >= 3 {
        return Ok(Loaded::Instance(CeoInstance::new(joint).map_err(CliError::input)?));
    }
    if names == ["Y1", "Y2"] {
        return Ok(Loaded::Pair(joint));
    }
    Err(CliError::Input(format!(
        "axes {names:?} match neither an observation pair (Y1, Y2) nor a \
         hidden-source instance (X, Y1, ..., Ym)"
    )))
}

fn generate(spec: &str) -> Result<Loaded, CliError> {
    let (kind, arg) = spec.split_once(':').ok_or_else(|| {
        CliError::Input(format!("generator spec `{spec}` must look like kind:value"))
    })?;
    match kind {
        "dsbs" => {
            let alpha = parse_num(arg, spec)?;
            Ok(Loaded::Pair(sources::dsbs(alpha).map_err(CliError::input)?))
        }
        "bsc-ceo" => {
            let alpha = parse_num(arg, spec)?;
            Ok(Loaded::Instance(sources::bsc_ceo(alpha).map_err(CliError::input)?))
        }
        "uniform" => {
            let n: usize = arg
                .parse()
                .map_err(|_| CliError::Input(format!("bad alphabet size in `{spec}`")))?;
            Ok(Loaded::Pair(sources::uniform_pair(n).map_err(CliError::input)?))
        }
        other => Err(CliError::Input(format!(
            "unknown generator `{other}`; expected dsbs, bsc-ceo, or uniform"
        ))),
    }
}

fn parse_num(arg: &str, spec: &str) -> Result<f64, CliError> {
    arg.parse().map_err(|_| CliError::Input(format!("bad number in generator spec `{spec}`")))
}

/// Odds table for a race over the pair's outcomes, row-major, either a bare
/// JSON array or {"odds": [...]}.
pub fn load_odds(path: &Path, outcomes: usize) -> Result<RaceSpec, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let doc: OddsDoc = serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("{} is not an odds document: {e}", path.display())))?;
    let odds = match doc {
        OddsDoc::Bare(o) | OddsDoc::Keyed { odds: o } => o,
    };
    if odds.len() != outcomes {
        return Err(CliError::Input(format!(
            "odds table has {} entries but the joint has {outcomes} outcomes",
            odds.len()
        )));
    }
    RaceSpec::new(odds).map_err(CliError::input)
}

/// Stored set function: JSON {"m": ..., "values": [...]} with one value per
/// subset mask in ascending mask order.
pub fn load_set_function(path: &Path) -> Result<SetFunction, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let doc: SetFunctionDoc = serde_json::from_str(&text).map_err(|e| {
        CliError::Input(format!("{} is not a set-function document: {e}", path.display()))
    })?;
    SetFunction::new(doc.m, doc.values).map_err(CliError::input)
}

/// Comma-separated floats with an exact arity, used for --point and --rates.
pub fn parse_floats(s: &str, n: usize, what: &str) -> Result<Vec<f64>, CliError> {
    let vals: Result<Vec<f64>, _> = s.split(',').map(|p| p.trim().parse::<f64>()).collect();
    match vals {
        Ok(v) if v.len() == n => Ok(v),
        Ok(v) => Err(CliError::Input(format!(
            "{what} needs {n} comma-separated values, got {}",
            v.len()
        ))),
        Err(_) => Err(CliError::Input(format!("{what} contains a non-numeric field: `{s}`"))),
    }
}
