fn main() {
    std::process::exit(mpm_sysid::bench::run(std::env::args_os()));
}
