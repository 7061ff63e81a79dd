use std::fs;
use std::path::Path;

use isac_core::acf::{acsl, periodic_acf};
use isac_core::baselines::{polar_construct_with_seed, zc_enumerate, DEFAULT_INTERLEAVER_SEED};
use isac_core::evaluation::report::{write_acsl_values, write_ber, write_summary, Comments, SummaryRow};
use isac_core::evaluation::{
    acsl_exhaustive, acsl_sampled, ber_curve, parse_snr_grid, summarize_exact, AcslReport, CodeUnderTest,
    MessageSource, MlCode, PolarBpsk, Population, RESERVOIR_SIZE,
};
use isac_core::neuralcode::load_checkpoint;

use crate::{Baseline, CliError, EvalArgs, EvalMode};

pub fn run(args: &EvalArgs) -> Result<(), CliError> {
    if let Some(t) = args.threads {
        if t == 0 {
            return Err(CliError::Usage("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| CliError::Runtime(e.to_string()))?
            .install(|| dispatch(args))
    } else {
        dispatch(args)
    }
}

fn dispatch(args: &EvalArgs) -> Result<(), CliError> {
    fs::create_dir_all(&args.out).map_err(|e| CliError::Runtime(format!("{}: {e}", args.out.display())))?;
    if args.baseline == Some(Baseline::Zc) {
        return eval_zc(args);
    }
    let mut comments: Comments = Vec::new();
    let code: Box<dyn CodeUnderTest> = match (&args.ckpt, args.baseline) {
        (Some(path), _) => {
            let ck = load_checkpoint(path)?;
            let id = args.id.clone().unwrap_or_else(|| default_id(path));
            comments.push(("checkpoint".into(), path.display().to_string()));
            comments.push(("training_seed".into(), ck.seed.to_string()));
            comments.push(("lambda".into(), format!("{:?}", ck.lambda)));
            comments.push(("epochs".into(), ck.epochs.to_string()));
            Box::new(MlCode::from_checkpoint(id, &ck)?)
        }
        (None, Some(Baseline::Polar)) => {
            let seed = args.interleaver_seed.unwrap_or(DEFAULT_INTERLEAVER_SEED);
            let spec = polar_construct_with_seed(2 * args.k, args.k, seed)?;
            let id = args.id.clone().unwrap_or_else(|| format!("polar_k{}", args.k));
            comments.push(("polar".into(), format!("n={} k={} interleaver_seed={seed}", spec.n_bits, spec.k)));
            comments.push((
                "info_set".into(),
                spec.info_set.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" "),
            ));
            Box::new(PolarBpsk::new(id, spec))
        }
        _ => return Err(CliError::Usage("pass --ckpt or --baseline".into())),
    };
    match args.mode {
        EvalMode::Acsl => eval_acsl(args, code.as_ref(), comments),
        EvalMode::Ber => eval_ber(args, code.as_ref(), comments),
    }
}

fn default_id(path: &Path) -> String {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned());
    let parent = path
        .parent()
        .and_then(|p| p.file_name())
        .map(|s| s.to_string_lossy().into_owned());
    match (parent, stem) {
        (Some(p), Some(s)) if s == "checkpoint" => p,
        (_, Some(s)) => s,
        _ => "model".into(),
    }
}

fn print_summary(rows: &[SummaryRow]) {
    println!(
        "{:<24} {:<32} {:>9} {:>9} {:>9} {:>9} {:>9}",
        "code", "population", "min", "q1", "median", "q3", "max"
    );
    for r in rows {
        println!(
            "{:<24} {:<32} {:>9.3} {:>9.3} {:>9.3} {:>9.3} {:>9.3}",
            r.code_id, r.population, r.min, r.q1, r.median, r.q3, r.max
        );
    }
}

fn eval_acsl(args: &EvalArgs, code: &dyn CodeUnderTest, mut comments: Comments) -> Result<(), CliError> {
    let report: AcslReport = if args.exhaustive {
        acsl_exhaustive(code)?
    } else {
        comments.push(("message_seed".into(), args.seed.to_string()));
        acsl_sampled(code, args.samples, MessageSource::Seeded(args.seed), false)?
    };
    let id = code.id();
    let values_path = args.out.join(format!("{id}_acsl.csv"));
    write_acsl_values(&values_path, &report, &comments)?;
    let row = SummaryRow::from_report(&report);
    let summary_path = args.out.join(format!("{id}_summary.csv"));
    write_summary(&summary_path, std::slice::from_ref(&row), &comments)?;
    print_summary(&[row]);
    if matches!(report.population, Population::Sampled { .. }) {
        println!("quartiles are P² estimates; {} raw values kept", RESERVOIR_SIZE.min(args.samples as usize));
    }
    println!("wrote {} and {}", values_path.display(), summary_path.display());
    Ok(())
}

fn eval_ber(args: &EvalArgs, code: &dyn CodeUnderTest, comments: Comments) -> Result<(), CliError> {
    let grid = parse_snr_grid(&args.snr)?;
    let curve = ber_curve(code, &grid, args.messages, args.seed)?;
    let path = args.out.join(format!("{}_ber.csv", code.id()));
    write_ber(&path, std::slice::from_ref(&curve), &comments)?;
    println!("{:>8} {:>10} {:>12} {:>12}", "snr_db", "messages", "bit_errors", "ber");
    for p in &curve.points {
        println!("{:>8.2} {:>10} {:>12} {:>12.4e}", p.snr_db, p.messages, p.bit_errors, p.ber);
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn eval_zc(args: &EvalArgs) -> Result<(), CliError> {
    let seqs = zc_enumerate(args.n)?;
    let id = args.id.clone().unwrap_or_else(|| format!("zc_n{}", args.n));
    println!("{} Zadoff-Chu sequences of length {}", seqs.len(), args.n);
    println!("{:>6} {:>16} {:>12}", "root", "max_sidelobe", "acsl_db");
    let mut values = Vec::with_capacity(seqs.len());
    for z in &seqs {
        let cw = z.codeword();
        let sidelobe = periodic_acf(&cw)?.max_sidelobe();
        let a = acsl(&cw)?;
        println!("{:>6} {:>16.3e} {:>12.2}", z.root, sidelobe, a.db);
        values.push(a.db);
    }
    let roots = seqs.iter().map(|z| z.root.to_string()).collect::<Vec<_>>().join(" ");
    let comments: Comments = vec![("roots".into(), roots), ("index".into(), "position in the root list".into())];
    let report = AcslReport {
        code_id: id.clone(),
        population: Population::Sampled {
            source: MessageSource::Sequential,
            count: seqs.len() as u64,
        },
        summary: summarize_exact(&values)?,
        reservoir: values.clone(),
        values: Some(values),
    };
    let values_path = args.out.join(format!("{id}_acsl.csv"));
    write_acsl_values(&values_path, &report, &comments)?;
    let row = SummaryRow::new(&id, &format!("all-{}-roots", seqs.len()), &report.summary);
    let summary_path = args.out.join(format!("{id}_summary.csv"));
    write_summary(&summary_path, &[row], &comments)?;
    println!("wrote {} and {}", values_path.display(), summary_path.display());
    Ok(())
}
