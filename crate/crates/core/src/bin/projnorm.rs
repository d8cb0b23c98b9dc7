use std::io::Write;

fn main() {
    let mut out = String::new();
    let mut err = String::new();
    let code = projnorm::cli::run(std::env::args_os(), &mut out, &mut err);
    print!("{out}");
    let _ = std::io::stdout().flush();
    eprint!("{err}");
    std::process::exit(code);
}
