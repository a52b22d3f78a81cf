fn main() {
    std::process::exit(ozmm_cli::cmd::run());
}
