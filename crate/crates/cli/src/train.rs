use std::fs;
use std::path::Path;

use isac_core::evaluation::report::write_history;
use isac_core::neuralcode::{save_checkpoint, Checkpoint};
use isac_core::training::train;

use crate::config::ExperimentConfig;
use crate::{CliError, TrainArgs};

pub const SMOKE_EPOCHS: usize = 20;

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

pub fn run(args: &TrainArgs) -> Result<(), CliError> {
    let (mut cfg, text) = ExperimentConfig::load(&args.config)?;
    if args.smoke {
        cfg.training.epochs = SMOKE_EPOCHS;
    }
    let out = cfg.output_dir(args.out.as_deref());
    fs::create_dir_all(&out).map_err(|e| io_err(&out, e))?;
    // the snapshot is the file as written, plus any override applied here
    let snapshot = if args.smoke {
        format!("{text}\n# --smoke: training.epochs = {SMOKE_EPOCHS}\n")
    } else {
        text
    };
    let snapshot_path = out.join("config.toml");
    fs::write(&snapshot_path, &snapshot).map_err(|e| io_err(&snapshot_path, e))?;

    let every = cfg.output.checkpoint_every;
    let mut last: Option<Checkpoint> = None;
    let result = train(&cfg.training, &snapshot, |ck| {
        let r = ck.history.last().expect("one record per epoch");
        if !args.quiet {
            eprintln!(
                "epoch {:>3}  lr {:.3e}  snr {:>4.1} dB  total {:.6}  sensing {:.6}  comms {:.6}",
                r.epoch, r.lr, r.snr_db, r.total, r.sensing, r.comms
            );
        }
        if every.is_some_and(|e| ck.epochs % e == 0 && ck.epochs < cfg.training.epochs) {
            save_checkpoint(ck, &out.join(format!("checkpoint_epoch{:04}.ckpt", ck.epochs)))?;
        }
        last = Some(ck.clone());
        Ok(())
    });
    let outcome = match result {
        Ok(o) => o,
        Err(e) => {
            if let (isac_core::Error::NonFiniteLoss { .. }, Some(ck)) = (&e, &last) {
                let dump = out.join("abort_state.ckpt");
                save_checkpoint(ck, &dump)?;
                eprintln!("last finite state saved to {}", dump.display());
            }
            return Err(e.into());
        }
    };

    let ckpt_path = out.join("checkpoint.ckpt");
    save_checkpoint(&outcome.checkpoint, &ckpt_path)?;
    let comments = vec![
        ("run".to_string(), cfg.name.clone()),
        ("seed".to_string(), cfg.training.seed.to_string()),
        ("config".to_string(), snapshot.clone()),
    ];
    let hist_path = out.join("history.csv");
    write_history(&hist_path, &outcome.history, &comments)?;
    println!("wrote {} and {}", ckpt_path.display(), hist_path.display());
    Ok(())
}
