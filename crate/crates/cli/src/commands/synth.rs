//! Synthetic panels with known partitions and atoms.

use std::path::PathBuf;

use serde::Serialize;
use tempart_core::rng::stream;
use tempart_core::synth::{sim1, sim2, Sim1Params, Sim2Params, SynthData};

use crate::config::{RunConfig, SynthBlock, SynthMode};
use crate::error::{CliError, Result};
use crate::io::{to_json_bytes, write_all, Panel};

pub const DATA_FILE: &str = "data.csv";
pub const TRUTH_LABELS: &str = "truth_labels.csv";
pub const TRUTH_GAMMAS: &str = "truth_gammas.csv";
pub const TRUTH_ATOMS: &str = "truth_atoms.csv";
pub const PROVENANCE: &str = "provenance.json";

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Design {
    Sim1(Sim1Params),
    Sim2(Sim2Params),
}

pub fn design(block: &SynthBlock) -> Design {
    match block.mode {
        SynthMode::Sim1 => {
            let d = Sim1Params::default();
            Design::Sim1(Sim1Params {
                m: block.m.unwrap_or(d.m),
                n_times: block.n_times.unwrap_or(d.n_times),
                alpha: block.alpha,
                mass: block.mass,
                sigma: block.sigma,
                tau: block.tau.unwrap_or(d.tau),
                theta: block.theta,
            })
        }
        SynthMode::Sim2 => {
            let d = Sim2Params::default();
            Design::Sim2(Sim2Params {
                m: block.m.unwrap_or(d.m),
                n_times: block.n_times.unwrap_or(d.n_times),
                alpha: block.alpha,
                phi1: block.phi1,
                mass: block.mass,
                sigma: block.sigma,
                tau: block.tau.unwrap_or(d.tau),
            })
        }
    }
}

/// Replicate `rep` of the design, on stream `(seed, rep)`.
pub fn generate(design: &Design, seed: u64, rep: u64) -> Result<SynthData> {
    let mut rng = stream(seed, rep);
    match design {
        Design::Sim1(p) => sim1(p, &mut rng),
        Design::Sim2(p) => sim2(p, &mut rng),
    }
    .map_err(CliError::config)
}

#[derive(Debug, Serialize)]
struct Provenance<'a> {
    mode: SynthMode,
    design: &'a Design,
    seed: u64,
    replicate: u64,
    version: &'static str,
}

fn long_csv(header: [&str; 3], rows: impl Iterator<Item = [String; 3]>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory write")
}

pub fn panel_of(data: &SynthData) -> Panel {
    let n_times = data.partitions.len();
    Panel {
        unit_ids: (1..=data.y.len()).map(|i| i.to_string()).collect(),
        time_ids: (1..=n_times).map(|t| t.to_string()).collect(),
        rows: data.y.clone(),
        coords: None,
    }
}

pub fn render(data: &SynthData, mode: SynthMode, design: &Design, seed: u64, rep: u64) -> Vec<(PathBuf, Vec<u8>)> {
    let m = data.y.len();
    let n_times = data.partitions.len();
    let cells = || (0..m).flat_map(move |i| (0..n_times).map(move |t| (i, t)));
    let labels = long_csv(
        ["unit", "t", "label"],
        cells().map(|(i, t)| {
            [(i + 1).to_string(), (t + 1).to_string(), (data.partitions[t].label(i) + 1).to_string()]
        }),
    );
    let gammas = long_csv(
        ["unit", "t", "gamma"],
        cells().map(|(i, t)| {
            [(i + 1).to_string(), (t + 1).to_string(), u8::from(data.gammas[t].get(i)).to_string()]
        }),
    );
    let atoms = long_csv(
        ["t", "cluster", "mu"],
        data.atoms.iter().enumerate().flat_map(|(t, row)| {
            row.iter()
                .enumerate()
                .map(move |(j, v)| [(t + 1).to_string(), (j + 1).to_string(), v.to_string()])
        }),
    );
    let prov = Provenance {
        mode,
        design,
        seed,
        replicate: rep,
        version: env!("CARGO_PKG_VERSION"),
    };
    vec![
        (PathBuf::from(DATA_FILE), panel_of(data).to_csv()),
        (PathBuf::from(TRUTH_LABELS), labels),
        (PathBuf::from(TRUTH_GAMMAS), gammas),
        (PathBuf::from(TRUTH_ATOMS), atoms),
        (PathBuf::from(PROVENANCE), to_json_bytes(&prov)),
    ]
}

/// One replicate is written straight into the output directory; more go to
/// `rep_001/`, `rep_002/`, ...
pub fn run(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let block = &cfg.model.synth;
    if block.replicates == 0 {
        return Err(CliError::Config("synth.replicates must be at least 1".into()));
    }
    let design = design(block);
    let seed = cfg.mcmc.seed;
    let mut files = Vec::new();
    for rep in 0..block.replicates as u64 {
        let data = generate(&design, seed, rep)?;
        let prefix = if block.replicates == 1 {
            PathBuf::new()
        } else {
            PathBuf::from(format!("rep_{:03}", rep + 1))
        };
        files.extend(
            render(&data, block.mode, &design, seed, rep)
                .into_iter()
                .map(|(name, bytes)| (prefix.join(name), bytes)),
        );
    }
    write_all(&cfg.io.out, &files)
}
