use std::io::{self, Write};

use clap::Parser;

/// Standard output that ends the process quietly once the reader has gone
/// away (`dblp-kgqa vocab | head`).
struct Stdout(io::Stdout);

fn closed<T>(r: io::Result<T>) -> io::Result<T> {
    match r {
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => std::process::exit(0),
        other => other,
    }
}

impl Write for Stdout {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        closed(self.0.write(buf))
    }

    fn flush(&mut self) -> io::Result<()> {
        closed(self.0.flush())
    }
}

fn main() {
    // Peek at the verbosity only to pick a default log level; parsing
    // errors are reported by `run`.
    let level = match dblp_kgqa::cli::Cli::try_parse().map(|c| c.verbose) {
        Ok(0) | Err(_) => "warn",
        Ok(1) => "info",
        Ok(_) => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let stdin = io::stdin();
    let code = dblp_kgqa::cli::run(std::env::args_os(), &mut Stdout(io::stdout()), &mut stdin.lock());
    std::process::exit(code);
}
