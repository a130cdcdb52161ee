//! Regenerates `include/retaudit.h` from the `extern "C"` surface. The
//! header is committed, so a missing or broken cbindgen only costs a warning
//! and builds keep working from the checked-in copy.

fn main() {
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");
    let crate_dir = std::env::var("CARGO_MANIFEST_DIR").expect("cargo sets CARGO_MANIFEST_DIR");
    match cbindgen::generate(&crate_dir) {
        Ok(bindings) => {
            bindings.write_to_file(format!("{crate_dir}/include/retaudit.h"));
        }
        Err(err) => println!("cargo:warning=C header not regenerated: {err}"),
    }
}
