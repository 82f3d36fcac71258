use leaklint::cli::{run, Environment};

fn main() {
    let env = Environment::from_process();
    let code = run(
        std::env::args_os(),
        &env,
        &mut std::io::stdout().lock(),
        &mut std::io::stderr().lock(),
    );
    std::process::exit(code);
}
