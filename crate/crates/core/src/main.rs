use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pascal_plate::cli_io::{self, Format, ModalRequest, Report};
use pascal_plate::mapping::SchemeKind;
use pascal_plate::modal::Normalization;
use pascal_plate::Result;

/// Mapped quadrilateral geometry checks and compatible-plate free vibration.
#[derive(Parser)]
#[command(name = "pascal-plate", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Area and second moments of one quadrilateral under each mapping.
    Sectprops(Common),
    /// Poles, natural pole coordinates and shape-function residuals.
    Mapcheck(Common),
    /// Natural frequencies for every mesh of a case.
    Modal {
        #[command(flatten)]
        common: Common,
        /// Also sample each mode shape (use with --format plot).
        #[arg(long)]
        plot: bool,
    },
    /// Modal run under two mappings with per-mode differences.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Mapping to compare against.
        #[arg(long, default_value = "bilinear")]
        against: SchemeKind,
    },
}

#[derive(Args)]
struct Common {
    /// Case file (TOML) or a built-in case name.
    #[arg(long)]
    case: String,
    /// Mapping scheme: bilinear, serendipity8 or pascal6.
    #[arg(long)]
    scheme: Option<SchemeKind>,
    /// Gauss order per direction (1..=6).
    #[arg(long)]
    gauss: Option<usize>,
    /// Number of modes.
    #[arg(long)]
    modes: Option<usize>,
    /// plain or per_pi2.
    #[arg(long)]
    normalization: Option<Normalization>,
    /// Include rotary inertia in the mass matrix.
    #[arg(long)]
    rotary: bool,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for the random-quad case.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl Common {
    fn case(&self) -> Result<cli_io::CaseFile> {
        let mut case = cli_io::load_case(&self.case, self.seed)?;
        let a = &mut case.analysis;
        if let Some(s) = self.scheme {
            a.scheme = s;
        }
        if let Some(g) = self.gauss {
            a.gauss = g;
        }
        if let Some(m) = self.modes {
            a.modes = m;
        }
        if let Some(n) = self.normalization {
            a.normalization = n;
        }
        a.rotary |= self.rotary;
        case.validate()?;
        Ok(case)
    }
}

fn run(cli: Cli) -> Result<(Report, Format, Option<PathBuf>)> {
    let (report, common) = match &cli.command {
        Command::Sectprops(c) => {
            let case = c.case()?;
            let schemes = match c.scheme {
                Some(s) => vec![s],
                None => SchemeKind::ALL.to_vec(),
            };
            (cli_io::run_sectprops(&case, &schemes)?, c)
        }
        Command::Mapcheck(c) => (cli_io::run_mapcheck(&c.case()?)?, c),
        Command::Modal { common, plot } => {
            let plot = *plot || common.format == Format::Plot;
            (
                cli_io::run_modal(&common.case()?, ModalRequest { plot })?,
                common,
            )
        }
        Command::Compare { common, against } => {
            let case = common.case()?;
            let first = case.analysis.scheme;
            (cli_io::compare(&case, first, *against)?, common)
        }
    };
    Ok((report, common.format, common.out.clone()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(cli).and_then(|(report, format, out)| {
        for w in &report.warnings {
            eprintln!("warning: {w}");
        }
        cli_io::emit(&report, format, out.as_deref())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
