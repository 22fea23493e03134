use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use photo_profile::aggregation::{
    evaluate_top_k, predict_user_profile, read_users, train_aggregator, write_users,
    AggregatorModel, UsersHeader,
};
use photo_profile::config::AppConfig;
use photo_profile::face_pipeline::{analyze_demography, render_summary};
use photo_profile::feature_records::{load_gallery, write_gallery, GalleryHeader};
use photo_profile::privacy_router::{write_audit_log, TextSensitivityModel};
use photo_profile::profiler::{
    build_profile, render_text_report, route_gallery, write_profile_json,
};
use photo_profile::representation::{
    classifier_accuracy, labeled_representations, predict_fused, read_label_file, train_fusion,
    write_label_file, FusionModel, View, ViewClassifier,
};
use photo_profile::synthetic;
use photo_profile::{Error, Result};

#[derive(Parser)]
#[command(
    name = "photo-profile",
    version,
    about = "Privacy-aware interest profiling of photo galleries"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(clap::Args)]
struct Common {
    /// TOML configuration file; defaults apply to anything it omits.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write the result here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct PrivacyFlags {
    /// Route every photo private.
    #[arg(long, conflicts_with = "allow_public")]
    force_private: bool,
    /// Let photos no privacy rule fires on go to the accurate tier.
    #[arg(long)]
    allow_public: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Build the interest profile of a gallery.
    Profile {
        gallery: PathBuf,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        privacy: PrivacyFlags,
        /// Categories listed in the text report.
        #[arg(long, default_value_t = 5)]
        top_k: usize,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Cluster faces and report per-identity demography.
    Demography {
        gallery: PathBuf,
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Print the routing audit log: one line per photo, then one per video.
    Route {
        gallery: PathBuf,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        privacy: PrivacyFlags,
    },
    /// Train the three view classifiers and fit their fusion weights.
    TrainFusion {
        gallery: PathBuf,
        /// `photo_id<TAB>class` lines.
        #[arg(long)]
        labels: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Number of classes; one more than the largest label when omitted.
        #[arg(long)]
        num_classes: Option<usize>,
        #[arg(long)]
        grid_step: Option<f64>,
        /// Share of labeled photos held out to fit the weights.
        #[arg(long, default_value_t = 0.3)]
        validation_fraction: f64,
    },
    /// Accuracy of a trained fusion model, fused and per view.
    EvalFusion {
        model: PathBuf,
        gallery: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Train the attention aggregator on a users file.
    TrainAggregator {
        users: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Squeezed dimension; overrides the config.
        #[arg(long)]
        reduced_dim: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Predict the top-k interests of every user in a users file.
    PredictProfile {
        model: PathBuf,
        users: PathBuf,
        #[arg(long, default_value_t = 5)]
        top_k: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Write generated test data.
    GenSynthetic {
        #[arg(value_enum)]
        kind: SyntheticKind,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Records, users or labeled photos to generate.
        #[arg(long)]
        count: Option<usize>,
        /// Label file for `fusion`; defaults to `<out stem>.labels.tsv`.
        #[arg(long)]
        labels_out: Option<PathBuf>,
        /// Supplies the video frame stride for `gallery`.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SyntheticKind {
    /// Random valid gallery.
    Gallery,
    /// The twelve-record routing fixture.
    Fixture,
    /// Users file with interest-correlated photo sets.
    Users,
    /// Labeled gallery for fusion training.
    Fusion,
    /// The default configuration file.
    Config,
}

fn load_config(path: Option<&Path>) -> Result<AppConfig> {
    match path {
        Some(p) => AppConfig::load(p),
        None => Ok(AppConfig::default()),
    }
}

fn apply_privacy_flags(config: &mut AppConfig, flags: &PrivacyFlags) {
    if flags.force_private {
        config.privacy.force_all_private = true;
    }
    if flags.allow_public {
        config.privacy.force_all_private = false;
    }
}

fn with_output(
    out: Option<&Path>,
    write: impl FnOnce(&mut dyn Write) -> io::Result<()>,
) -> Result<()> {
    match out {
        Some(path) => {
            let file = File::create(path).map_err(|e| Error::io(path, e))?;
            let mut w = BufWriter::new(file);
            write(&mut w)
                .and_then(|_| w.flush())
                .map_err(|e| Error::io(path, e))
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock).map_err(|e| Error::io(Path::new("<stdout>"), e))
        }
    }
}

fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    with_output(out, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        w.write_all(b"\n")
    })
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

#[derive(Serialize)]
struct FusionReport {
    weights: [f64; 3],
    validation_accuracy: f64,
    grid_points: usize,
    train_size: usize,
    validation_size: usize,
}

#[derive(Serialize)]
struct EvalReport {
    fused_accuracy: f64,
    embedding_accuracy: f64,
    scene_scores_accuracy: f64,
    objects_accuracy: f64,
    samples: usize,
}

#[derive(Serialize)]
struct UserPrediction<'a> {
    user_id: &'a str,
    top_k: Vec<usize>,
    scores: Vec<f64>,
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Profile {
            gallery,
            common,
            privacy,
            top_k,
            format,
        } => {
            let mut config = load_config(common.config.as_deref())?;
            apply_privacy_flags(&mut config, &privacy);
            let map = config.category_map()?;
            let gallery = load_gallery(&gallery)?;
            let profile = build_profile(
                &gallery,
                &config.profile(),
                &map,
                TextSensitivityModel::reference(),
            )?;
            with_output(common.out.as_deref(), |w| match format {
                Format::Json => write_profile_json(&profile, w),
                Format::Text => w.write_all(render_text_report(&profile, top_k).as_bytes()),
            })
        }
        Command::Demography {
            gallery,
            common,
            format,
        } => {
            let config = load_config(common.config.as_deref())?;
            let gallery = load_gallery(&gallery)?;
            let report = analyze_demography(&gallery.header, &gallery.records, &config.clustering)?;
            match format {
                Format::Json => write_json(&report, common.out.as_deref()),
                Format::Text => with_output(common.out.as_deref(), |w| {
                    w.write_all(render_summary(&report).as_bytes())
                }),
            }
        }
        Command::Route {
            gallery,
            common,
            privacy,
        } => {
            let mut config = load_config(common.config.as_deref())?;
            apply_privacy_flags(&mut config, &privacy);
            let gallery = load_gallery(&gallery)?;
            let (_, routing) = route_gallery(
                &gallery,
                &config.profile(),
                TextSensitivityModel::reference(),
            )?;
            with_output(common.out.as_deref(), |w| {
                write_audit_log(&routing.frames, w)?;
                write_audit_log(&routing.videos, w)
            })
        }
        Command::TrainFusion {
            gallery,
            labels,
            common,
            num_classes,
            grid_step,
            validation_fraction,
        } => {
            let config = load_config(common.config.as_deref())?;
            if !(validation_fraction > 0.0 && validation_fraction < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "validation fraction must lie in (0, 1), got {validation_fraction}"
                )));
            }
            let gallery = load_gallery(&gallery)?;
            let labels = read_label_file(&labels)?;
            let mut samples = labeled_representations(&gallery, &labels)?;
            let classes = num_classes
                .unwrap_or_else(|| samples.iter().map(|s| s.label + 1).max().unwrap_or(0));
            let mut rng = ChaCha8Rng::seed_from_u64(config.fusion.classifier.seed);
            samples.shuffle(&mut rng);
            let n_val = ((samples.len() as f64) * validation_fraction).round() as usize;
            if n_val == 0 || n_val >= samples.len() {
                return Err(Error::InvalidInput(format!(
                    "{} labeled photos cannot be split into training and validation sets",
                    samples.len()
                )));
            }
            let (val, train) = samples.split_at(n_val);
            let step = grid_step.unwrap_or(config.fusion.grid_step);
            let (model, fit) = train_fusion(train, val, classes, &config.fusion.classifier, step)?;
            let out = common.out.ok_or_else(|| {
                Error::InvalidParameter("train-fusion needs --out for the model".into())
            })?;
            write_json(&model, Some(&out))?;
            write_json(
                &FusionReport {
                    weights: fit.weights.as_array(),
                    validation_accuracy: fit.accuracy,
                    grid_points: fit.grid_points,
                    train_size: train.len(),
                    validation_size: val.len(),
                },
                None,
            )
        }
        Command::EvalFusion {
            model,
            gallery,
            labels,
            common,
        } => {
            let model: FusionModel = read_json(&model)?;
            let gallery = load_gallery(&gallery)?;
            let labels = read_label_file(&labels)?;
            let samples = labeled_representations(&gallery, &labels)?;
            if samples.is_empty() {
                return Err(Error::InvalidInput("no labeled photos".into()));
            }
            let mut correct = 0usize;
            for s in &samples {
                if predict_fused(&model, &s.rep)?.0 == s.label {
                    correct += 1;
                }
            }
            let ys: Vec<usize> = samples.iter().map(|s| s.label).collect();
            let view_acc = |c: &dyn ViewClassifier, v: View| {
                let xs: Vec<&[f64]> = samples.iter().map(|s| s.rep.view(v)).collect();
                classifier_accuracy(c, &xs, &ys)
            };
            write_json(
                &EvalReport {
                    fused_accuracy: correct as f64 / samples.len() as f64,
                    embedding_accuracy: view_acc(&model.embedding, View::Embedding)?,
                    scene_scores_accuracy: view_acc(&model.scene_scores, View::SceneScores)?,
                    objects_accuracy: view_acc(&model.objects, View::Objects)?,
                    samples: samples.len(),
                },
                common.out.as_deref(),
            )
        }
        Command::TrainAggregator {
            users,
            common,
            reduced_dim,
            epochs,
        } => {
            let mut config = load_config(common.config.as_deref())?;
            if let Some(k) = reduced_dim {
                config.aggregator.reduced_dim = k;
            }
            if let Some(e) = epochs {
                config.aggregator.epochs = e;
            }
            let (header, users) = read_users(&users)?;
            let model = train_aggregator(&users, header.num_classes, &config.aggregator)?;
            let out = common.out.ok_or_else(|| {
                Error::InvalidParameter("train-aggregator needs --out for the model".into())
            })?;
            write_json(&model, Some(&out))
        }
        Command::PredictProfile {
            model,
            users,
            top_k,
            common,
        } => {
            let model: AggregatorModel = read_json(&model)?;
            model.validate()?;
            let (_, users) = read_users(&users)?;
            let predictions = users
                .iter()
                .map(|u| {
                    let p = predict_user_profile(&model, u.features.view(), top_k)?;
                    Ok(UserPrediction {
                        user_id: &u.user_id,
                        top_k: p.top_k,
                        scores: p.scores,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            with_output(common.out.as_deref(), |w| {
                for p in &predictions {
                    serde_json::to_writer(&mut *w, p)?;
                    w.write_all(b"\n")?;
                }
                Ok(())
            })?;
            if users.iter().any(|u| !u.interests.is_empty()) {
                let m = evaluate_top_k(&model, &users, top_k)?;
                eprintln!(
                    "top-{} precision {:.4} recall {:.4} f1 {:.4}",
                    m.k, m.precision, m.recall, m.f1
                );
            }
            Ok(())
        }
        Command::GenSynthetic {
            kind,
            out,
            seed,
            count,
            labels_out,
            config,
        } => match kind {
            SyntheticKind::Gallery => {
                let stride = load_config(config.as_deref())?.video.stride;
                let g = synthetic::random_gallery_with_stride(
                    seed,
                    count.unwrap_or(100),
                    &GalleryHeader::new(32, 16),
                    stride,
                )?;
                write_gallery(&g.header, &g.records, &out)
            }
            SyntheticKind::Fixture => {
                let g = synthetic::fixture_gallery();
                write_gallery(&g.header, &g.records, &out)
            }
            SyntheticKind::Users => {
                let users = synthetic::synthetic_users(seed, count.unwrap_or(200), 40, 8);
                let header = UsersHeader {
                    num_features: 40,
                    num_classes: 8,
                };
                write_users(&header, &users, &out)
            }
            SyntheticKind::Fusion => {
                let (g, labels) = synthetic::fusion_gallery(seed, count.unwrap_or(300), 4);
                write_gallery(&g.header, &g.records, &out)?;
                let map: BTreeMap<String, usize> = g
                    .records
                    .iter()
                    .zip(labels)
                    .map(|(r, l)| (r.photo_id.clone(), l))
                    .collect();
                let labels_path = labels_out.unwrap_or_else(|| out.with_extension("labels.tsv"));
                write_label_file(&map, &labels_path)
            }
            SyntheticKind::Config => {
                std::fs::write(&out, AppConfig::default_toml()).map_err(|e| Error::io(&out, e))
            }
        },
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
