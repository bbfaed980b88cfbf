//! Command-line interface.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use erakit_core::dsp::{a_weighted_rms, rms_series};
use erakit_core::era::{era_projection_2d, variance_summary, Retain};
use erakit_core::features::{FeatureConfig, FeatureKind, PitchDeltas};

use crate::corpus::{self, normalize_label, CorpusManifest, ManifestInputs, ESC50_SOURCE};
use crate::error::{Error, Result};
use crate::extract::{compute_peaks, extract_features, load_clip};
use crate::plot::{self, PlotSpec};
use crate::spectrogram::render_spectrogram;
use crate::tables;

#[derive(Debug, Parser)]
#[command(
    name = "erakit",
    version,
    about = "Expressive range analysis of audio corpora"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Discover corpora and write a manifest.
    Ingest(IngestArgs),
    /// Extract pitch, loudness and timbre vectors for every manifest entry.
    Extract(ExtractArgs),
    /// Loudness peak timing and relative magnitude per clip.
    Peaks(PeaksArgs),
    /// Two-component PCA projection of one label and feature kind.
    Era(EraArgs),
    /// Normalized total variance per source and feature kind.
    Variance(VarianceArgs),
    /// Write a clip's spectrogram as a PGM image.
    RenderSpectrogram(SpectrogramArgs),
    /// Plot a clip's RMS loudness over time as SVG.
    RenderRms(RmsArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Generated source as `<name>=<dir>`; repeatable.
    #[arg(long = "generated", value_name = "SOURCE=DIR", value_parser = parse_source)]
    pub generated: Vec<(String, PathBuf)>,
    #[arg(long, requires = "esc50_audio")]
    pub esc50_meta: Option<PathBuf>,
    #[arg(long, requires = "esc50_meta")]
    pub esc50_audio: Option<PathBuf>,
    /// Comma-separated labels to keep.
    #[arg(long, value_delimiter = ',')]
    pub labels: Option<Vec<String>>,
    /// Path template under each generated root.
    #[arg(long, default_value = corpus::DEFAULT_LAYOUT)]
    pub layout: String,
    /// Also decode every file during validation.
    #[arg(long)]
    pub check_decode: bool,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_source(s: &str) -> std::result::Result<(String, PathBuf), String> {
    match s.split_once('=') {
        Some((name, dir)) if !name.is_empty() && !dir.is_empty() => {
            Ok((name.to_string(), PathBuf::from(dir)))
        }
        _ => Err(format!("expected <source>=<dir>, got {s:?}")),
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PitchDeltaMode {
    VoicedOnly,
    Interpolated,
}

#[derive(Debug, Args)]
pub struct AnalysisArgs {
    #[arg(long, default_value_t = erakit_core::CANONICAL_SAMPLE_RATE)]
    pub sample_rate: u32,
    #[arg(long, default_value_t = 512)]
    pub hop: usize,
    #[arg(long, default_value_t = 2048)]
    pub frame: usize,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[command(flatten)]
    pub analysis: AnalysisArgs,
    #[arg(long, default_value_t = 128)]
    pub n_mels: usize,
    #[arg(long, default_value_t = 13, value_parser = clap::value_parser!(u8).range(1..=13))]
    pub n_mfcc: u8,
    /// Window of the A-weighted loudness series; need not be a power of two.
    #[arg(long, default_value_t = 2048)]
    pub rms_frame: usize,
    #[arg(long, default_value_t = 65.4)]
    pub fmin: f64,
    #[arg(long, default_value_t = 2093.0)]
    pub fmax: f64,
    #[arg(long, value_enum, default_value_t = PitchDeltaMode::VoicedOnly)]
    pub pitch_deltas: PitchDeltaMode,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PeaksArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Use the A-weighted loudness series instead of plain RMS.
    #[arg(long)]
    pub peaks_weighted: bool,
    #[command(flatten)]
    pub analysis: AnalysisArgs,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub out_svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EraArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub label: String,
    #[arg(long)]
    pub kind: KindArg,
    #[arg(long)]
    pub standardize: bool,
    /// Source drawn on top of the others.
    #[arg(long, default_value = ESC50_SOURCE)]
    pub reference: String,
    #[arg(long)]
    pub out_csv: PathBuf,
    #[arg(long)]
    pub out_svg: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KindArg {
    Pitch,
    Loudness,
    Timbre,
}

impl From<KindArg> for FeatureKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Pitch => FeatureKind::Pitch,
            KindArg::Loudness => FeatureKind::Loudness,
            KindArg::Timbre => FeatureKind::Timbre,
        }
    }
}

#[derive(Debug, Args)]
pub struct VarianceArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub reference: String,
    #[arg(long)]
    pub standardize: bool,
    /// Fraction of pooled variance the retained components must explain.
    #[arg(long, default_value_t = 0.95)]
    pub retain: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SpectrogramArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[command(flatten)]
    pub analysis: AnalysisArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RmsArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub weighted: bool,
    #[command(flatten)]
    pub analysis: AnalysisArgs,
    #[arg(long)]
    pub out: PathBuf,
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Extract(a) => extract(a),
        Command::Peaks(a) => peaks(a),
        Command::Era(a) => era(a),
        Command::Variance(a) => variance(a),
        Command::RenderSpectrogram(a) => spectrogram(a),
        Command::RenderRms(a) => render_rms(a),
    }
}

fn ingest(a: IngestArgs) -> Result<()> {
    let mut generated = BTreeMap::new();
    for (name, dir) in a.generated {
        if generated.insert(name.clone(), dir).is_some() {
            return Err(Error::Usage(format!("source {name:?} given twice")));
        }
    }
    let esc50 = match (a.esc50_meta, a.esc50_audio) {
        (Some(meta), Some(audio)) => Some((corpus::load_esc50_metadata(&read(&meta)?)?, audio)),
        _ => None,
    };
    if generated.is_empty() && esc50.is_none() {
        return Err(Error::Usage(
            "give at least one --generated source or --esc50-meta".into(),
        ));
    }
    let inputs = ManifestInputs {
        generated,
        esc50,
        label_filter: a.labels.map(|l| l.into_iter().collect::<BTreeSet<_>>()),
        layout: Some(a.layout),
    };
    let manifest = corpus::build_manifest(&inputs)?;
    let report = corpus::validate_manifest(&manifest, a.check_decode);
    log::info!(
        "{} entries, {} labels, {} sources",
        manifest.entries.len(),
        manifest.labels.len(),
        manifest.sources.len()
    );
    for cell in report.cells.iter().filter(|c| c.count == 0) {
        log::warn!(
            "no entries for label {:?} in source {:?}",
            cell.label,
            cell.source
        );
    }
    for p in &report.missing {
        log::warn!("missing file {}", p.display());
    }
    for p in &report.unsupported {
        log::warn!("unsupported audio format {}", p.display());
    }
    for (p, reason) in &report.decode_failures {
        log::warn!("cannot decode {}: {reason}", p.display());
    }
    write(&a.out, manifest.to_json()?)
}

fn extract(a: ExtractArgs) -> Result<()> {
    let manifest = CorpusManifest::read(&a.manifest)?;
    let config = FeatureConfig {
        frame_length: a.analysis.frame,
        hop: a.analysis.hop,
        n_mels: a.n_mels,
        n_mfcc: a.n_mfcc as usize,
        rms_frame: a.rms_frame,
        fmin: a.fmin,
        fmax: a.fmax,
        pitch_deltas: match a.pitch_deltas {
            PitchDeltaMode::VoicedOnly => PitchDeltas::VoicedOnly,
            PitchDeltaMode::Interpolated => PitchDeltas::Interpolated,
        },
    };
    let extraction = extract_features(
        &manifest.entries,
        a.analysis.sample_rate,
        &config,
        a.threads,
    )?;
    if !extraction.pitch_excluded.is_empty() {
        log::info!(
            "{} of {} clips have no voiced frames and were excluded from pitch",
            extraction.pitch_excluded.len(),
            manifest.entries.len()
        );
    }
    write(&a.out, tables::emit_features_csv(&extraction.rows)?)
}

fn peaks(a: PeaksArgs) -> Result<()> {
    let manifest = CorpusManifest::read(&a.manifest)?;
    let rows = compute_peaks(
        &manifest.entries,
        a.analysis.sample_rate,
        a.analysis.frame,
        a.analysis.hop,
        a.peaks_weighted,
        a.threads,
    )?;
    write(&a.out, tables::emit_peaks_csv(&rows)?)?;
    if let Some(svg) = a.out_svg {
        let spec = plot::peaks_plot(
            "Loudness peaks",
            &rows,
            manifest.reference_source.as_deref(),
        );
        write(&svg, plot::emit_scatter_svg(&spec)?)?;
    }
    Ok(())
}

fn era(a: EraArgs) -> Result<()> {
    let rows = tables::read_features_csv(&read(&a.features)?)?;
    let label = normalize_label(&a.label);
    let projection = era_projection_2d(&rows, &label, a.kind.into(), a.standardize)?;
    for (source, n) in projection.counts() {
        log::info!("{label} {}: {source} {n} points", projection.kind);
    }
    write(&a.out_csv, tables::emit_projection_csv(&projection)?)?;
    if let Some(svg) = a.out_svg {
        let spec = plot::projection_plot(&projection, Some(&a.reference));
        write(&svg, plot::emit_scatter_svg(&spec)?)?;
    }
    Ok(())
}

fn variance(a: VarianceArgs) -> Result<()> {
    let rows = tables::read_features_csv(&read(&a.features)?)?;
    let summary = variance_summary(
        &rows,
        &a.reference,
        Retain::VarianceFraction(a.retain),
        a.standardize,
    )?;
    for (kind, r) in &summary.retained {
        log::info!("{kind}: {r} components retained");
    }
    for cell in &summary.cells {
        log::info!("{} {}: {} rows", cell.source, cell.kind, cell.n_rows);
    }
    write(&a.out, tables::emit_variance_csv(&summary)?)
}

fn spectrogram(a: SpectrogramArgs) -> Result<()> {
    let clip = load_clip(&a.input, a.analysis.sample_rate)?;
    let image = render_spectrogram(&clip, a.analysis.frame, a.analysis.hop)?;
    write(&a.out, image.to_pgm())
}

fn render_rms(a: RmsArgs) -> Result<()> {
    let clip = load_clip(&a.input, a.analysis.sample_rate)?;
    let series = if a.weighted {
        a_weighted_rms(&clip, a.analysis.frame, a.analysis.hop)?
    } else {
        rms_series(&clip, a.analysis.frame, a.analysis.hop)?
    };
    let name = a
        .input
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("clip");
    let points: Vec<(&str, f64, f64)> = series
        .frame_times()
        .into_iter()
        .zip(series.values.row(0))
        .map(|(t, &v)| (name, t, v))
        .collect();
    let y = if a.weighted { "A-weighted RMS" } else { "RMS" };
    let spec = PlotSpec::from_sources(format!("{name} loudness"), "Time (s)", y, points, None);
    write(&a.out, plot::emit_line_svg(&spec)?)
}
