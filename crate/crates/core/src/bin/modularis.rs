// Copyright 2026 The Modularis Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use modularis::builders::query::{build_query, q12_spec, q14_spec, q19_spec, q4_spec, QuerySpec};
use modularis::builders::{build_group_by, build_join, build_join_sequence, GroupBySpec, JoinSpec, SequenceSpec};
use modularis::harness::bench::radix_for;
use modularis::harness::io::{tuple_words, write_words};
use modularis::harness::{
    generate, generate_tables, read_workload, run_plan, run_suite, write_csv, write_workload, BenchOptions,
    Correspondence, RunConfig, Suite, TableScale, WorkloadSpec,
};
use modularis::{Error, Plan, Result};

#[derive(Parser)]
#[command(name = "modularis", version, about = "Sub-operator query engine over a simulated RDMA cluster")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a plan over a generated workload.
    Run {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long, default_value_t = 1)]
        ranks: usize,
        #[arg(long)]
        workload: PathBuf,
        #[arg(long)]
        metrics_out: PathBuf,
        /// Tuples per remote write.
        #[arg(long, default_value_t = 2048)]
        put_batch: usize,
        #[arg(long)]
        strict_epochs: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Raw little-endian result rows.
        #[arg(long)]
        result_out: Option<PathBuf>,
    },
    /// Generate key/payload relations.
    Gen {
        #[arg(long)]
        tuples: usize,
        #[arg(long)]
        bits: u32,
        /// one-to-one, fanout:<k> or random.
        #[arg(long, default_value = "one-to-one")]
        correspondence: String,
        #[arg(long, default_value_t = 2)]
        relations: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate the orders, lineitem and part tables.
    GenTables {
        #[arg(long, default_value_t = 1 << 17)]
        orders: usize,
        #[arg(long, default_value_t = 1 << 16)]
        parts: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a benchmark suite and write CSV.
    Bench {
        #[arg(long, value_enum)]
        suite: SuiteArg,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 20)]
        log2_tuples: u32,
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
        ranks: Vec<usize>,
        #[arg(long)]
        no_verify: bool,
    },
    /// Emit a plan from a builder spec.
    Build {
        #[arg(long, value_enum)]
        kind: BuildKind,
        /// JSON spec; required for join, sequence, groupby and query.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Key bits for the canned queries.
        #[arg(long, default_value_t = 17)]
        bits: u32,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Join,
    Groupby,
    Sequence,
    Queries,
}

#[derive(Clone, Copy, ValueEnum)]
enum BuildKind {
    Join,
    Sequence,
    Groupby,
    Query,
    Q4,
    Q12,
    Q14,
    Q19,
}

fn read_spec<T: serde::de::DeserializeOwned>(path: Option<&PathBuf>) -> Result<T> {
    let path = path.ok_or_else(|| Error::SpecInvalid("--spec is required for this kind".into()))?;
    Ok(serde_json::from_slice(&std::fs::read(path)?)?)
}

fn build(kind: BuildKind, spec: Option<&PathBuf>, bits: u32) -> Result<Plan> {
    let canned = |f: fn(_) -> QuerySpec| -> Result<Plan> { build_query(&f(radix_for(bits)?)) };
    match kind {
        BuildKind::Join => build_join(&read_spec::<JoinSpec>(spec)?),
        BuildKind::Sequence => build_join_sequence(&read_spec::<SequenceSpec>(spec)?),
        BuildKind::Groupby => build_group_by(&read_spec::<GroupBySpec>(spec)?),
        BuildKind::Query => build_query(&read_spec::<QuerySpec>(spec)?),
        BuildKind::Q4 => canned(q4_spec),
        BuildKind::Q12 => canned(q12_spec),
        BuildKind::Q14 => canned(q14_spec),
        BuildKind::Q19 => canned(q19_spec),
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Run {
            plan,
            ranks,
            workload,
            metrics_out,
            put_batch,
            strict_epochs,
            seed,
            result_out,
        } => {
            let plan = Plan::from_json(&std::fs::read_to_string(plan)?)?;
            let (_, relations) = read_workload(&workload)?;
            let cfg = RunConfig {
                ranks,
                put_batch,
                strict_epochs,
                seed,
                ..RunConfig::default()
            };
            let (report, rows) = run_plan(&plan, &relations, &cfg)?;
            std::fs::write(&metrics_out, serde_json::to_string_pretty(&report)?)?;
            if let Some(path) = result_out {
                write_words(&path, &tuple_words(&rows)?)?;
            }
            println!("{} result rows in {:.3}s", report.result_rows, report.elapsed_seconds);
        }
        Command::Gen {
            tuples,
            bits,
            correspondence,
            relations,
            seed,
            out,
        } => {
            let spec = WorkloadSpec {
                tuple_count: tuples,
                key_bits: bits,
                correspondence: correspondence.parse::<Correspondence>()?,
                seed,
                relation_count: relations,
            };
            let rels = generate(&spec)?;
            write_workload(&out, Some(&spec), &rels)?;
        }
        Command::GenTables {
            orders,
            parts,
            seed,
            out,
        } => {
            let tables = generate_tables(TableScale { orders, parts }, seed)?;
            write_workload(&out, None, &tables)?;
        }
        Command::Bench {
            suite,
            out,
            log2_tuples,
            ranks,
            no_verify,
        } => {
            let suite = match suite {
                SuiteArg::Join => Suite::Join,
                SuiteArg::Groupby => Suite::GroupBy,
                SuiteArg::Sequence => Suite::Sequence,
                SuiteArg::Queries => Suite::Queries,
            };
            let opts = BenchOptions {
                log2_tuples,
                ranks,
                verify: !no_verify,
                ..BenchOptions::default()
            };
            let rows = run_suite(suite, &opts)?;
            write_csv(&out, &rows)?;
            if rows.iter().any(|r| r.verified == Some(false)) {
                return Err(Error::Eval("a benchmark result differs from the reference".into()));
            }
        }
        Command::Build { kind, spec, bits, out } => {
            let plan = build(kind, spec.as_ref(), bits)?;
            std::fs::write(out, plan.to_json())?;
        }
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    let spec_error = matches!(
        e,
        Error::SpecInvalid(_) | Error::SharedAttrViolation(_) | Error::CompressionIllegal { .. } | Error::InvalidRadix(_)
    );
    if e.is_plan_error() || spec_error {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({ "error": { "kind": e.kind(), "message": e.to_string() } }));
            ExitCode::from(exit_code(&e))
        }
    }
}
