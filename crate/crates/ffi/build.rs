fn main() {
    let crate_dir = std::env::var("CARGO_MANIFEST_DIR").unwrap();
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");

    let config = cbindgen::Config::from_file("cbindgen.toml").expect("cbindgen.toml parses");
    match cbindgen::Builder::new()
        .with_crate(&crate_dir)
        .with_config(config)
        .generate()
    {
        Ok(bindings) => {
            let out = std::path::Path::new(&crate_dir).join("include");
            std::fs::create_dir_all(&out).expect("create include dir");
            bindings.write_to_file(out.join("z2flow.h"));
        }
        Err(e) => {
            // Header generation failing should not break the Rust build.
            println!("cargo:warning=cbindgen failed: {e}");
        }
    }
}
