//! Batch front end: `starcheck`, `certify`, `fomenko`, and `scan`
//! subcommands over the analysis library. See the repository README for
//! the config-file format, flags, and the exit-code contract.

mod commands;
mod config;

use std::process::ExitCode;

use commands::{CmdError, ObservableChoice, EXIT_CONFIG, EXIT_FAIL};
use config::RunConfig;
use qanomaly::torus::IntegralChoice;

const USAGE: &str = "\
usage: qanomaly <command> [options] [--key=value ...]

commands:
  starcheck   run the star-product property suites (D1 compatibility,
              associativity, scheme-matrix checks)
  certify     full quantizability pipeline for the action observables
  fomenko     bifurcation graph of one action integral, plus plot CSVs
  scan        certify over a parameter grid

options:
  --config FILE        flat key = value config file
  --out FILE           write the JSON report here instead of stdout
  --observable WHICH   certify/scan: s1 | s2 | both (default both)
  --expect VERDICT     certify: exit 0 iff every verdict matches
  --integral WHICH     fomenko: s1 | s2 (required)
  --csv BASE           fomenko: write BASE.ellipse.csv and resonance-line CSVs
  --orbit-csv BASE     certify: write verification-orbit CSVs per torus
  --sweep KEY=V1,V2    scan: sweep a config key over values (repeatable)
  --key=value          override any config key (see README for the key list)

exit codes: 0 success/expected verdict, 1 failed check or internal error,
2 config/validation error, 3 inconclusive verdict or empty geometry";

struct Cli {
    command: String,
    config_path: Option<String>,
    out: Option<String>,
    observable: ObservableChoice,
    expect: Option<String>,
    integral: Option<IntegralChoice>,
    csv: Option<String>,
    orbit_csv: Option<String>,
    sweeps: Vec<(String, Vec<String>)>,
    overrides: Vec<(String, String)>,
}

fn parse_args(args: &[String]) -> Result<Cli, CmdError> {
    let mut cli = Cli {
        command: args
            .first()
            .cloned()
            .ok_or_else(|| CmdError::config(format!("missing command\n{USAGE}")))?,
        config_path: None,
        out: None,
        observable: ObservableChoice::Both,
        expect: None,
        integral: None,
        csv: None,
        orbit_csv: None,
        sweeps: Vec::new(),
        overrides: Vec::new(),
    };
    let mut i = 1;
    let next_value = |i: &mut usize, flag: &str, inline: Option<&str>| -> Result<String, CmdError> {
        if let Some(v) = inline {
            return Ok(v.to_string());
        }
        *i += 1;
        args.get(*i)
            .cloned()
            .ok_or_else(|| CmdError::config(format!("flag {flag} needs a value")))
    };
    while i < args.len() {
        let arg = &args[i];
        let Some(flag) = arg.strip_prefix("--") else {
            return Err(CmdError::config(format!("unexpected argument `{arg}`\n{USAGE}")));
        };
        let (name, inline) = match flag.split_once('=') {
            Some((n, v)) => (n, Some(v)),
            None => (flag, None),
        };
        match name {
            "config" => cli.config_path = Some(next_value(&mut i, "--config", inline)?),
            "out" => cli.out = Some(next_value(&mut i, "--out", inline)?),
            "observable" => {
                cli.observable =
                    ObservableChoice::parse(&next_value(&mut i, "--observable", inline)?)?
            }
            "expect" => cli.expect = Some(next_value(&mut i, "--expect", inline)?),
            "integral" => {
                cli.integral = Some(match next_value(&mut i, "--integral", inline)?.as_str() {
                    "s1" => IntegralChoice::S1,
                    "s2" => IntegralChoice::S2,
                    other => {
                        return Err(CmdError::config(format!(
                            "--integral must be s1|s2, got `{other}`"
                        )))
                    }
                })
            }
            "csv" => cli.csv = Some(next_value(&mut i, "--csv", inline)?),
            "orbit-csv" => cli.orbit_csv = Some(next_value(&mut i, "--orbit-csv", inline)?),
            "sweep" => {
                let spec = next_value(&mut i, "--sweep", inline)?;
                let Some((key, values)) = spec.split_once('=') else {
                    return Err(CmdError::config(format!(
                        "--sweep needs KEY=V1,V2,..., got `{spec}`"
                    )));
                };
                let values: Vec<String> =
                    values.split(',').map(|v| v.trim().to_string()).collect();
                if values.is_empty() || values.iter().any(String::is_empty) {
                    return Err(CmdError::config(format!("--sweep {key}: empty value list")));
                }
                cli.sweeps.push((key.trim().to_string(), values));
            }
            // Any other --key=value is a config override; key validity is
            // checked when it is applied.
            _ => {
                let value = next_value(&mut i, arg, inline)?;
                cli.overrides.push((name.to_string(), value));
            }
        }
        i += 1;
    }
    Ok(cli)
}

fn load_config(cli: &Cli) -> Result<RunConfig, CmdError> {
    let mut cfg = match &cli.config_path {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CmdError::config(format!("cannot read config {path}: {e}")))?;
            RunConfig::parse(&text)
                .map_err(|e| CmdError::config(format!("{path}: {}", e.message)))?
        }
        None => RunConfig::default(),
    };
    for (k, v) in &cli.overrides {
        cfg.set(k, v).map_err(|e| CmdError::config(e.message))?;
    }
    Ok(cfg)
}

fn run() -> Result<i32, CmdError> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--help" || a == "-h") || args.is_empty() {
        println!("{USAGE}");
        return Ok(0);
    }
    let cli = parse_args(&args)?;
    let cfg = load_config(&cli)?;
    match cli.command.as_str() {
        "starcheck" => commands::run_starcheck(&cfg, cli.out.as_deref()),
        "certify" => commands::run_certify(
            &cfg,
            cli.observable,
            cli.expect.as_deref(),
            cli.out.as_deref(),
            cli.orbit_csv.as_deref(),
        ),
        "fomenko" => {
            let integral = cli
                .integral
                .ok_or_else(|| CmdError::config("fomenko needs --integral s1|s2"))?;
            commands::run_fomenko(&cfg, integral, cli.out.as_deref(), cli.csv.as_deref())
        }
        "scan" => commands::run_scan(&cfg, &cli.sweeps, cli.observable, cli.out.as_deref()),
        other => Err(CmdError::config(format!("unknown command `{other}`\n{USAGE}"))),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(if e.exit == EXIT_CONFIG { EXIT_CONFIG } else { EXIT_FAIL } as u8)
        }
    }
}
