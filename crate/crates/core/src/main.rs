use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    let (code, text) = spsym::cli::run(std::env::args_os());
    let _ = writeln!(std::io::stdout().lock(), "{text}");
    if let Ok(v) = serde_json::from_str::<serde_json::Value>(&text) {
        if let Some(e) = v.get("error").and_then(|e| e.as_str()) {
            eprintln!("spsym: {e}");
        }
    }
    ExitCode::from(code as u8)
}
