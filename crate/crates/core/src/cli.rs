//! Command-line front end: script runner, relation and catalog dumps, and
//! the interactive loop.

use std::fs;
use std::io::{self, BufRead, IsTerminal, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::lang::parse_script;
use crate::session::Session;
use crate::value::Oid;

pub const EXIT_OK: i32 = 0;
pub const EXIT_SCRIPT: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "rxo", version, about = "Object-relational database engine with a relational command language")]
pub struct Args {
    /// Snapshot file to load at start and save after a successful run.
    #[arg(long, global = true)]
    pub db: Option<PathBuf>,
    /// Print each statement before its result.
    #[arg(long, global = true)]
    pub echo: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Interactive session.
    Repl,
    /// Execute script files in order.
    Run {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Print every derived relation schema.
    DumpRelations {
        files: Vec<PathBuf>,
        /// Also list the local namespace of a reference, as NAME=CLASS.
        #[arg(long = "ref", value_name = "NAME=CLASS")]
        refs: Vec<String>,
    },
    /// Print the class catalog.
    DumpCatalog { files: Vec<PathBuf> },
}

pub fn run(args: Args, stdin: &mut dyn BufRead, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let mut session = Session::new();
    session.echo = args.echo;
    if let Some(path) = &args.db {
        if let Err(msg) = load_into(&mut session, path) {
            let _ = writeln!(err, "error: {msg}");
            return EXIT_USAGE;
        }
    }
    let code = match &args.command {
        Command::Repl => return run_repl(&mut session, args.db.as_deref(), stdin, out, err),
        Command::Run { files } => run_files(&mut session, files, true, out, err),
        Command::DumpRelations { files, refs } => {
            let code = run_files(&mut session, files, false, out, err);
            if code == EXIT_OK {
                for spec in refs {
                    let Some((name, class)) = spec.split_once('=') else {
                        let _ = writeln!(err, "error: --ref expects NAME=CLASS, got {spec}");
                        return EXIT_USAGE;
                    };
                    if let Err(e) = session.bind_reference(name, class, Vec::new()) {
                        let _ = writeln!(err, "error: {e}");
                        return EXIT_SCRIPT;
                    }
                }
                let _ = out.write_all(session.relations_listing().as_bytes());
            }
            code
        }
        Command::DumpCatalog { files } => {
            let code = run_files(&mut session, files, false, out, err);
            if code == EXIT_OK {
                let _ = out.write_all(session.database().catalog().dump().as_bytes());
            }
            code
        }
    };
    if code == EXIT_OK {
        if let (Some(path), Command::Run { .. }) = (&args.db, &args.command) {
            if let Err(e) = fs::write(path, session.save_snapshot()) {
                let _ = writeln!(err, "error: cannot write {}: {e}", path.display());
                return EXIT_USAGE;
            }
        }
    }
    code
}

fn load_into(session: &mut Session, path: &Path) -> Result<(), String> {
    match fs::read_to_string(path) {
        Ok(text) => session.load_snapshot(&text).map_err(|e| format!("{}: {e}", path.display())),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(()),
        Err(e) => Err(format!("cannot read {}: {e}", path.display())),
    }
}

/// Parses every file before executing any of them.
fn run_files(session: &mut Session, files: &[PathBuf], show: bool, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let mut scripts = Vec::with_capacity(files.len());
    for path in files {
        let source = match fs::read_to_string(path) {
            Ok(s) => s,
            Err(e) => {
                let _ = writeln!(err, "error: cannot read {}: {e}", path.display());
                return EXIT_USAGE;
            }
        };
        match parse_script(&source) {
            Ok(stmts) => scripts.push((path, stmts)),
            Err(e) => {
                let _ = writeln!(err, "error: {}: {e}", path.display());
                return EXIT_SCRIPT;
            }
        }
    }
    for (path, stmts) in scripts {
        let mut text = String::new();
        let result = session.run_statements(&stmts, &mut text);
        if show {
            let _ = out.write_all(text.as_bytes());
        }
        if let Err(e) = result {
            let _ = writeln!(err, "error: {}: {e}", path.display());
            return EXIT_SCRIPT;
        }
    }
    EXIT_OK
}

const HELP: &str = "\
:relations               list derived relations
:catalog                 list classes and views
:ref NAME CLASS [@n ...] bind a reference name to objects of CLASS
:save [PATH]             write a snapshot
:load [PATH]             read a snapshot
:quit                    leave";

/// True once `buffer` looks like the end of a statement.
fn looks_complete(buffer: &str) -> bool {
    let t = buffer.trim_end();
    t.ends_with(';') || t.ends_with("..") || t.ends_with('}')
}

pub fn run_repl(
    session: &mut Session,
    db_path: Option<&Path>,
    stdin: &mut dyn BufRead,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let interactive = io::stdin().is_terminal();
    let mut buffer = String::new();
    loop {
        if interactive {
            let _ = write!(out, "{}", if buffer.is_empty() { "rxo> " } else { "...> " });
            let _ = out.flush();
        }
        let mut line = String::new();
        match stdin.read_line(&mut line) {
            Ok(0) => break,
            Ok(_) => {}
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                return EXIT_USAGE;
            }
        }
        if buffer.trim().is_empty() && line.trim_start().starts_with(':') {
            buffer.clear();
            match meta(session, db_path, line.trim(), out, err) {
                Meta::Continue => continue,
                Meta::Quit => return EXIT_OK,
                Meta::Fatal => return EXIT_USAGE,
            }
        }
        buffer.push_str(&line);
        if !looks_complete(&buffer) {
            continue;
        }
        if submit(session, &buffer, false, out, err) {
            buffer.clear();
        }
    }
    if !buffer.trim().is_empty() {
        submit(session, &buffer, true, out, err);
    }
    EXIT_OK
}

/// Executes a complete buffer. Returns false when more input is needed.
fn submit(session: &mut Session, buffer: &str, at_eof: bool, out: &mut dyn Write, err: &mut dyn Write) -> bool {
    let stmts = match parse_script(buffer) {
        Ok(s) => s,
        Err(e) if e.is_incomplete() && !at_eof => return false,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return true;
        }
    };
    let mut text = String::new();
    let result = session.run_statements(&stmts, &mut text);
    let _ = out.write_all(text.as_bytes());
    if let Err(e) = result {
        let _ = writeln!(err, "error: {e}");
    }
    true
}

enum Meta {
    Continue,
    Quit,
    Fatal,
}

fn meta(session: &mut Session, db_path: Option<&Path>, line: &str, out: &mut dyn Write, err: &mut dyn Write) -> Meta {
    let words: Vec<&str> = line.split_whitespace().collect();
    let path_arg = |i: usize| words.get(i).map(PathBuf::from).or_else(|| db_path.map(Path::to_path_buf));
    match words[0] {
        ":quit" | ":q" | ":exit" => return Meta::Quit,
        ":help" => {
            let _ = writeln!(out, "{HELP}");
        }
        ":relations" => {
            let _ = out.write_all(session.relations_listing().as_bytes());
        }
        ":catalog" => {
            let _ = out.write_all(session.database().catalog().dump().as_bytes());
        }
        ":ref" if words.len() >= 3 => {
            let mut oids = Vec::new();
            for w in &words[3..] {
                match w.strip_prefix('@').and_then(|n| n.parse().ok()) {
                    Some(n) => oids.push(Oid(n)),
                    None => {
                        let _ = writeln!(err, "error: expected an object reference like @3, got {w}");
                        return Meta::Continue;
                    }
                }
            }
            match session.bind_reference(words[1], words[2], oids) {
                Ok(()) => {
                    let _ = writeln!(out, "reference {} bound to {}", words[1], words[2]);
                }
                Err(e) => {
                    let _ = writeln!(err, "error: {e}");
                }
            }
        }
        ":save" => match path_arg(1) {
            Some(path) => match fs::write(&path, session.save_snapshot()) {
                Ok(()) => {
                    let _ = writeln!(out, "saved {}", path.display());
                }
                Err(e) => {
                    let _ = writeln!(err, "error: cannot write {}: {e}", path.display());
                    return Meta::Fatal;
                }
            },
            None => {
                let _ = writeln!(err, "error: no snapshot path given");
            }
        },
        ":load" => match path_arg(1) {
            Some(path) => match fs::read_to_string(&path) {
                Ok(text) => match session.load_snapshot(&text) {
                    Ok(()) => {
                        let _ = writeln!(out, "loaded {}", path.display());
                    }
                    Err(e) => {
                        let _ = writeln!(err, "error: {e}");
                    }
                },
                Err(e) => {
                    let _ = writeln!(err, "error: cannot read {}: {e}", path.display());
                    return Meta::Fatal;
                }
            },
            None => {
                let _ = writeln!(err, "error: no snapshot path given");
            }
        },
        other => {
            let _ = writeln!(err, "error: unknown command {other}; try :help");
        }
    }
    Meta::Continue
}
