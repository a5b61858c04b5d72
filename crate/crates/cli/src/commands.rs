//! One function per subcommand. Each loads its inputs, runs the library
//! pipeline and writes the requested artifact files into --out.

use std::fs;
use std::path::Path;

use badbands::cube::HyperspectralCube;
use badbands::detector::{
    detect, sensitivity_sweep, threshold_bands, DetectParams, SweepParams,
};
use badbands::envi::{
    parse_envi_header, read_cube, resolve_data_path, save_cube, DataType, EnviHeader, Interleave,
};
use badbands::error::{Error, Result};
use badbands::synth::{gap_threshold, gen_figure1_cube, gen_injected_cube, score_detection};
use badbands::SyntheticSpec;
use sha2::{Digest, Sha256};

use crate::args::{
    parse_band_list, parse_grid, DetectArgs, Format, InspectArgs, SensitivityArgs, SimulateArgs,
    DEFAULT_SEED,
};
use crate::pgm::band_to_pgm;
use crate::plot::{mav_svg, sweep_svg};
use crate::report::{
    report_csv, sweep_csv, sweep_rows, to_json_bytes, JsonReport, ScoreFile, SweepFile, TruthFile,
    TOOL_VERSION,
};

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path)
        .map_err(|e| Error::InvalidArgument(format!("cannot read '{}': {e}", path.display())))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes)
        .map_err(|e| Error::InvalidArgument(format!("cannot write '{}': {e}", path.display())))
}

fn ensure_out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| {
        Error::InvalidArgument(format!("cannot create output dir '{}': {e}", dir.display()))
    })
}

struct LoadedInput {
    header: EnviHeader,
    cube: HyperspectralCube,
    sha256: String,
}

/// Loads an ENVI pair and hashes its content (header text, then payload)
/// so reports can pin down exactly what they were computed from.
fn load_input(hdr_path: &Path) -> Result<LoadedInput> {
    let header_bytes = read_bytes(hdr_path)?;
    let text = String::from_utf8(header_bytes.clone()).map_err(|_| {
        Error::InvalidArgument(format!("header '{}' is not valid UTF-8", hdr_path.display()))
    })?;
    let header = parse_envi_header(&text)?;
    let payload = read_bytes(&resolve_data_path(hdr_path)?)?;
    let cube = read_cube(&header, &payload)?;

    let mut hasher = Sha256::new();
    hasher.update(&header_bytes);
    hasher.update(&payload);
    let sha256: String = hasher.finalize().iter().map(|b| format!("{b:02x}")).collect();

    Ok(LoadedInput {
        header,
        cube,
        sha256,
    })
}

fn provenance_line(reproduce: &str, sha256: &str) -> String {
    format!("{reproduce} | input sha256 {sha256} | version {TOOL_VERSION}")
}

pub fn cmd_detect(args: &DetectArgs) -> Result<()> {
    let loaded = load_input(&args.input)?;
    let params = DetectParams {
        targets: args.targets,
        seed: args.seed,
        convention: args.convention,
        threshold: args.thres,
    };
    let report = detect(&loaded.cube, &params)?;

    ensure_out_dir(&args.out)?;
    let reproduce = format!(
        "badbands detect --input {} --thres {} --targets {} --seed {} --convention {}",
        args.input.display(),
        args.thres,
        args.targets,
        args.seed,
        args.convention
    );
    let mut written = Vec::new();
    if args.formats.contains(&Format::Json) {
        let json = JsonReport::new(
            reproduce.clone(),
            args.input.display().to_string(),
            loaded.sha256.clone(),
            &report,
        );
        write_file(&args.out.join("report.json"), &to_json_bytes(&json))?;
        written.push("report.json");
    }
    if args.formats.contains(&Format::Csv) {
        let csv = report_csv(&report, loaded.header.wavelengths.as_deref());
        write_file(&args.out.join("report.csv"), csv.as_bytes())?;
        written.push("report.csv");
    }
    if args.formats.contains(&Format::Svg) {
        let svg = mav_svg(
            &report.mav.values,
            report.threshold,
            &report.selected_bands,
            loaded.header.bbl.as_deref(),
            args.log_y,
            &provenance_line(&reproduce, &loaded.sha256),
        );
        write_file(&args.out.join("mav.svg"), svg.as_bytes())?;
        written.push("mav.svg");
    }

    println!(
        "selected {} of {} bands at thres {} (ridge {}); wrote {} in '{}'",
        report.selected_bands.len(),
        loaded.cube.bands(),
        args.thres,
        report.ridge_applied,
        written.join(", "),
        args.out.display()
    );
    Ok(())
}

pub fn cmd_sensitivity(args: &SensitivityArgs) -> Result<()> {
    let loaded = load_input(&args.input)?;
    let m_grid = parse_grid(&args.grid)?;
    let params = SweepParams {
        m_grid: m_grid.clone(),
        thresholds: args.thres_list.clone(),
        repeats: args.repeats,
        seed: args.seed,
        convention: args.convention,
    };
    let table = sensitivity_sweep(&loaded.cube, &params)?;

    ensure_out_dir(&args.out)?;
    let thres_list: Vec<String> = args.thres_list.iter().map(|t| t.to_string()).collect();
    let reproduce = format!(
        "badbands sensitivity --input {} --thres-list {} --grid {} --repeats {} --seed {} \
         --convention {}",
        args.input.display(),
        thres_list.join(","),
        args.grid,
        args.repeats,
        args.seed,
        args.convention
    );
    let mut written = Vec::new();
    if args.formats.contains(&Format::Csv) {
        write_file(&args.out.join("sweep.csv"), sweep_csv(&table).as_bytes())?;
        written.push("sweep.csv");
    }
    if args.formats.contains(&Format::Svg) {
        let svg = sweep_svg(&table, &provenance_line(&reproduce, &loaded.sha256));
        write_file(&args.out.join("sweep.svg"), svg.as_bytes())?;
        written.push("sweep.svg");
    }
    if args.formats.contains(&Format::Json) {
        let (cells, summaries) = sweep_rows(&table);
        let file = SweepFile {
            tool_version: TOOL_VERSION.to_string(),
            reproduce_command: reproduce.clone(),
            input: args.input.display().to_string(),
            input_sha256: loaded.sha256.clone(),
            seed: args.seed,
            convention: args.convention.to_string(),
            repeats: args.repeats,
            thresholds: args.thres_list.clone(),
            m_grid,
            cells,
            summaries,
        };
        write_file(&args.out.join("sweep.json"), &to_json_bytes(&file))?;
        written.push("sweep.json");
    }

    let skipped = table.cells.iter().filter(|c| c.selected.is_none()).count();
    println!(
        "swept {} cells ({} skipped); wrote {} in '{}'",
        table.cells.len(),
        skipped,
        written.join(", "),
        args.out.display()
    );
    Ok(())
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let (cube, truth, generator, seed, target_pixels, spec, source_arg);
    if args.figure1 {
        let s = args.seed.unwrap_or(DEFAULT_SEED);
        let (c, targets) = gen_figure1_cube(s);
        cube = c;
        truth = vec![2];
        generator = "figure1";
        seed = s;
        target_pixels = Some(targets);
        spec = None;
        source_arg = "--figure1".to_string();
    } else {
        let spec_path = args.spec.as_ref().expect("clap requires --spec or --figure1");
        let text = String::from_utf8(read_bytes(spec_path)?).map_err(|_| {
            Error::InvalidArgument(format!("spec '{}' is not valid UTF-8", spec_path.display()))
        })?;
        let mut s = SyntheticSpec::from_json(&text)?;
        if let Some(seed_override) = args.seed {
            s.seed = seed_override;
        }
        let (c, t) = gen_injected_cube(&s)?;
        cube = c;
        truth = t;
        generator = "injected";
        seed = s.seed;
        target_pixels = None;
        source_arg = format!("--spec {}", spec_path.display());
        spec = Some(s);
    }

    ensure_out_dir(&args.out)?;
    let mut reproduce = format!(
        "badbands simulate {source_arg} --seed {seed} --name {}",
        args.name
    );
    if args.score {
        reproduce.push_str(&format!(
            " --score --targets {} --convention {}",
            args.targets, args.convention
        ));
        if let Some(t) = args.thres {
            reproduce.push_str(&format!(" --thres {t}"));
        }
    }

    let (hdr_path, dat_path) = save_cube(&cube, &args.out, &args.name, Interleave::Bsq, DataType::F64)?;
    let truth_file = TruthFile {
        tool_version: TOOL_VERSION.to_string(),
        reproduce_command: reproduce.clone(),
        generator: generator.to_string(),
        seed,
        truth: truth.clone(),
        target_pixels,
        spec,
    };
    write_file(&args.out.join("truth.json"), &to_json_bytes(&truth_file))?;
    println!(
        "wrote '{}', '{}' and truth.json ({} bands, {} faulted)",
        hdr_path.display(),
        dat_path.display(),
        cube.bands(),
        truth.len()
    );

    if args.score {
        let probe = detect(
            &cube,
            &DetectParams {
                targets: args.targets,
                seed,
                convention: args.convention,
                threshold: 0.0,
            },
        )?;
        let (threshold, source) = match args.thres {
            Some(t) => (t, "explicit"),
            None => {
                let t = gap_threshold(&probe.mav.values).ok_or_else(|| {
                    Error::InvalidArgument(
                        "the MAV spectrum has no gap to place an automatic threshold in; \
                         pass an explicit --thres"
                            .into(),
                    )
                })?;
                (t, "gap")
            }
        };
        let mut report = threshold_bands(&probe.mav, threshold)?;
        report.ridge_applied = probe.ridge_applied;
        report.constant_bands = probe.constant_bands.clone();
        report.noise_injection_seed = probe.noise_injection_seed;
        report.degenerate = probe.degenerate;

        let score = score_detection(&report, &truth);
        let file = ScoreFile::new(reproduce, source, &report, truth, score.clone());
        write_file(&args.out.join("score.json"), &to_json_bytes(&file))?;
        println!(
            "score at thres {threshold} ({source}): precision {:.4}, recall {:.4}, f1 {:.4}",
            score.precision, score.recall, score.f1
        );
    }
    Ok(())
}

pub fn cmd_inspect(args: &InspectArgs) -> Result<()> {
    let loaded = load_input(&args.input)?;
    let bands = parse_band_list(&args.bands)?;
    for &band in &bands {
        if band > loaded.cube.bands() {
            return Err(Error::BandOutOfRange {
                index: band,
                count: loaded.cube.bands(),
            });
        }
    }
    ensure_out_dir(&args.out)?;
    let reproduce = format!(
        "badbands inspect --input {} --bands {}",
        args.input.display(),
        args.bands
    );
    for &band in &bands {
        let comment = format!(
            "band {band} | {}",
            provenance_line(&reproduce, &loaded.sha256)
        );
        let pgm = band_to_pgm(
            loaded.cube.plane(band - 1),
            loaded.cube.samples(),
            loaded.cube.lines(),
            &comment,
        );
        write_file(&args.out.join(format!("band_{band}.pgm")), &pgm)?;
    }
    println!(
        "wrote {} band image(s) in '{}'",
        bands.len(),
        args.out.display()
    );
    Ok(())
}
