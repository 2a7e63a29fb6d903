//! `dynabuf` command-line front end.

pub mod bench;
pub mod valuefile;

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Read, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use dynabuf_core::bridge::CoercionOptions;
use dynabuf_core::text::{format_f64, parse_text_named};
use dynabuf_core::wire::decode_named;
use dynabuf_core::{bundled, rexp, DescriptorPool, HostValue, ProtoLoader};

#[derive(Debug, Parser)]
#[command(name = "dynabuf", version, about = "Reflection-based Protocol Buffers toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load .proto files or directories and list every message and enum.
    Compile {
        #[command(flatten)]
        schema: SchemaArgs,
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
    /// Text format in, wire bytes out.
    Encode {
        #[command(flatten)]
        schema: SchemaArgs,
        #[command(flatten)]
        io: IoArgs,
    },
    /// Wire bytes in, text format (or field listing) out.
    Decode {
        #[command(flatten)]
        schema: SchemaArgs,
        #[command(flatten)]
        io: IoArgs,
        /// Print one line per declared field with its host-side value.
        #[arg(long)]
        list: bool,
        /// Show 64-bit integers as exact decimal strings in --list output.
        #[arg(long, env = "DYNABUF_INT64_AS_STRING", value_parser = clap::builder::FalseyValueParser::new())]
        int64_as_string: bool,
    },
    /// Convert between JSON value files and rexp.REXP payloads.
    #[command(subcommand)]
    Rexp(RexpCommand),
    /// Compare canonical text, protobuf and gzipped protobuf sizes.
    Bench {
        /// JSON value files; built-in samples when none are given.
        inputs: Vec<PathBuf>,
        /// Also write the report rows as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the HTTP service until interrupted.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
}

#[derive(Debug, Subcommand)]
pub enum RexpCommand {
    /// JSON value file in, rexp.REXP bytes out.
    Encode(IoOnly),
    /// rexp.REXP bytes in, JSON value file out.
    Decode(IoOnly),
}

#[derive(Debug, Args)]
pub struct SchemaArgs {
    /// Directory searched for imports; its .proto files are also loaded
    /// for encode/decode.
    #[arg(long = "proto-path", env = "DYNABUF_PROTO_PATH", value_delimiter = ':')]
    pub proto_path: Vec<PathBuf>,
    /// Additional .proto file to load.
    #[arg(long)]
    pub proto: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IoArgs {
    /// Full message type name, e.g. tutorial.Person.
    #[arg(long = "type")]
    pub type_name: String,
    #[command(flatten)]
    pub io: IoOnly,
}

#[derive(Debug, Args)]
pub struct IoOnly {
    /// Input file; `-` or absent reads stdin.
    pub input: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
}

impl CliError {
    /// 2 for usage errors, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

fn data(e: impl std::fmt::Display) -> CliError {
    CliError::Data(e.to_string())
}

fn read_input(input: &Option<PathBuf>) -> Result<Vec<u8>, CliError> {
    match input {
        Some(p) if p.as_os_str() != "-" => fs::read(p).map_err(|source| CliError::Io {
            path: p.display().to_string(),
            source,
        }),
        _ => {
            let mut buf = Vec::new();
            io::stdin().read_to_end(&mut buf).map_err(|source| CliError::Io {
                path: "<stdin>".into(),
                source,
            })?;
            Ok(buf)
        }
    }
}

fn write_output(out: &Option<PathBuf>, bytes: &[u8], stdout: &mut dyn Write) -> Result<(), CliError> {
    match out {
        Some(p) => fs::write(p, bytes).map_err(|source| CliError::Io {
            path: p.display().to_string(),
            source,
        }),
        None => stdout.write_all(bytes).map_err(|source| CliError::Io {
            path: "<stdout>".into(),
            source,
        }),
    }
}

fn utf8(bytes: Vec<u8>) -> Result<String, CliError> {
    String::from_utf8(bytes).map_err(|_| CliError::Data("input is not valid UTF-8".into()))
}

/// Bundled schemas plus every file reachable from the schema flags.
fn schema_pool(args: &SchemaArgs) -> Result<DescriptorPool, CliError> {
    let loader = ProtoLoader::with_search_paths(&args.proto_path);
    let mut sources: Vec<&Path> = args.proto_path.iter().map(PathBuf::as_path).filter(|p| p.is_dir()).collect();
    sources.extend(args.proto.iter().map(PathBuf::as_path));
    if sources.is_empty() {
        return Ok(bundled::pool().clone());
    }
    loader.load_into(bundled::pool(), &sources).map_err(data)
}

fn known_type(pool: &DescriptorPool, name: &str) -> Result<(), CliError> {
    if pool.message(name).is_some() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("unknown message type `{name}`")))
    }
}

fn host_value_line(v: &HostValue) -> String {
    let join = |items: Vec<String>| format!("[{}]", items.join(", "));
    match v {
        HostValue::Logical(x) => join(
            x.iter()
                .map(|b| match b {
                    Some(true) => "TRUE".into(),
                    Some(false) => "FALSE".into(),
                    None => "NA".into(),
                })
                .collect(),
        ),
        HostValue::Int(x) => join(x.iter().map(|i| i.to_string()).collect()),
        HostValue::Real(x) => join(x.iter().map(|d| format_f64(*d)).collect()),
        HostValue::Str(x) => join(
            x.iter()
                .map(|s| s.as_ref().map_or("NA".into(), |s| format!("{s:?}")))
                .collect(),
        ),
        HostValue::Bytes(x) => join(
            x.iter()
                .map(|b| b.iter().map(|c| format!("{c:02x}")).collect::<String>())
                .collect(),
        ),
        HostValue::Complex(x) => join(
            x.iter()
                .map(|c| format!("{}{:+}i", format_f64(c.re), c.im))
                .collect(),
        ),
        HostValue::Message(x) => join(x.iter().map(|m| m.summary()).collect()),
    }
}

/// Runs one command, writing results to `stdout` and diagnostics to
/// `stderr`.
pub fn run(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Compile { schema, paths } => {
            let loader = ProtoLoader::with_search_paths(&schema.proto_path);
            let pool = loader.load_into(&DescriptorPool::new(), &paths).map_err(data)?;
            let mut listing = String::new();
            for name in pool.names() {
                let _ = writeln!(listing, "{name}");
            }
            write_output(&None, listing.as_bytes(), stdout)
        }
        Command::Encode { schema, io } => {
            let pool = schema_pool(&schema)?;
            known_type(&pool, &io.type_name)?;
            let text = utf8(read_input(&io.io.input)?)?;
            let m = parse_text_named(&pool, &io.type_name, &text).map_err(data)?;
            if !m.is_initialized() {
                let _ = writeln!(stderr, "warning: missing required fields: {}", m.missing_required().join(", "));
            }
            write_output(&io.io.out, &m.encode(), stdout)
        }
        Command::Decode {
            schema,
            io,
            list,
            int64_as_string,
        } => {
            let pool = schema_pool(&schema)?;
            known_type(&pool, &io.type_name)?;
            let bytes = read_input(&io.io.input)?;
            let m = decode_named(&pool, &io.type_name, &bytes).map_err(data)?;
            let out = if list {
                let opts = CoercionOptions::int64_as_string(int64_as_string);
                let mut s = String::new();
                for (name, v) in m.to_named_list(&opts) {
                    let _ = writeln!(s, "{name}: {}", host_value_line(&v));
                }
                s
            } else {
                m.to_text()
            };
            write_output(&io.io.out, out.as_bytes(), stdout)
        }
        Command::Rexp(RexpCommand::Encode(io)) => {
            let text = utf8(read_input(&io.input)?)?;
            let v = valuefile::parse_str(&text).map_err(data)?;
            let s = rexp::serialize_value(&v);
            for w in &s.warnings {
                let _ = writeln!(stderr, "warning: {w}");
            }
            write_output(&io.out, &s.bytes, stdout)
        }
        Command::Rexp(RexpCommand::Decode(io)) => {
            let bytes = read_input(&io.input)?;
            let v = rexp::unserialize_value(&bytes).map_err(data)?;
            let mut text = serde_json::to_string_pretty(&valuefile::to_json(&v)).map_err(data)?;
            text.push('\n');
            write_output(&io.out, text.as_bytes(), stdout)
        }
        Command::Bench { inputs, out } => {
            let items: Vec<(String, dynabuf_core::RValue)> = if inputs.is_empty() {
                bench::builtin_datasets()
            } else {
                inputs
                    .iter()
                    .map(|p| {
                        let text = utf8(read_input(&Some(p.clone()))?)?;
                        let v = valuefile::parse_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?;
                        Ok((p.display().to_string(), v))
                    })
                    .collect::<Result<_, CliError>>()?
            };
            let report = bench::SizeReport::new(items.iter().map(|(n, v)| (n.as_str(), v)));
            if let Some(path) = &out {
                let mut json = serde_json::to_string_pretty(&report.to_json()).map_err(data)?;
                json.push('\n');
                write_output(&Some(path.clone()), json.as_bytes(), stdout)?;
            }
            write_output(&None, report.render().as_bytes(), stdout)
        }
        Command::Serve { port, host } => {
            let addr: SocketAddr = format!("{host}:{port}")
                .parse()
                .map_err(|e| CliError::Usage(format!("invalid address `{host}:{port}`: {e}")))?;
            let rt = tokio::runtime::Runtime::new().map_err(data)?;
            rt.block_on(async {
                let handle = dynabuf_service::serve(addr, dynabuf_service::AppState::builtin())
                    .await
                    .map_err(|e| CliError::Data(format!("cannot bind {addr}: {e}")))?;
                let _ = writeln!(stderr, "listening on http://{}", handle.local_addr());
                let _ = tokio::signal::ctrl_c().await;
                handle.shutdown().await.map_err(data)
            })
        }
    }
}
