fn main() {
    eprintln!("cli not wired up yet");
}
