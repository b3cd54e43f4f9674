//! Mixture construction and budget-frontier subcommands.

use std::fs;

use anyhow::{Context, Result};

use fuzzforge_core::dataset::DatasetManifest;
use fuzzforge_core::mixtures::{budget_frontier, build_mixture, strategy_suite, BudgetParams, MixtureSpec};

use super::{BudgetArgs, MixArgs};

pub fn mix(args: MixArgs) -> Result<()> {
    let real = DatasetManifest::read(&args.real)?;
    let synth = DatasetManifest::read(&args.synth)?;
    fs::create_dir_all(&args.out)?;

    if args.suite {
        let suite = strategy_suite(&real, &synth, &args.seeds)?;
        for (spec, manifest) in &suite {
            let path = args.out.join(format!("{}_seed{}.json", spec.name(), spec.seed));
            manifest.write(&path)?;
        }
        log::info!(
            "wrote {} mixture manifests ({} combinations x {} seeds) into {}",
            suite.len(),
            suite.len() / args.seeds.len(),
            args.seeds.len(),
            args.out.display()
        );
        return Ok(());
    }

    let name = args.spec.as_deref().context("--spec R{m}_S{n} is required without --suite")?;
    let spec = MixtureSpec::parse(name, args.seed)?;
    let manifest = build_mixture(&real, &synth, &spec)?;
    let path = args.out.join(format!("{}_seed{}.json", spec.name(), spec.seed));
    manifest.write(&path)?;
    log::info!("wrote {} images ({}) -> {}", manifest.len(), spec.name(), path.display());
    Ok(())
}

pub fn budget(args: BudgetArgs) -> Result<()> {
    let params = BudgetParams {
        c_real: args.c_real,
        c_synth: args.c_synth,
        t_real: args.t_real,
        t_synth: args.t_synth,
        c_total: args.c_total,
        t_total: if args.t_total == 0.0 && args.t_real == 0.0 && args.t_synth == 0.0 {
            // Time axis unused: treat as non-binding.
            0.0
        } else {
            args.t_total
        },
    };
    anyhow::ensure!(params.validate(), "budget parameters must be nonnegative and finite");
    let pairs = budget_frontier(&params, args.step, args.n_synth_max)?;

    match &args.out {
        Some(path) => {
            let mut body = serde_json::to_string_pretty(&pairs)?;
            body.push('\n');
            fs::write(path, body)?;
        }
        None => {
            println!("n_real\tn_synth");
            for (r, s) in &pairs {
                println!("{r}\t{s}");
            }
        }
    }
    Ok(())
}
