//! Driving an experiment from a TOML config through the library front end,
//! as the binary does, and reading back the long-format plot data.

use transmon_lru::cli::{from_long, main_with_args, Table};

const CONFIG: &str = r#"
experiment = "repeated-lru"
seed = 3

[repeated_lru]
leakage_rate = 0.02
steady_state = 0.16
lru_removal = 0.99
rounds = 20
"#;

fn main() -> transmon_lru::Result<()> {
    let dir = std::env::temp_dir().join("transmon-lru-config-run");
    std::fs::create_dir_all(&dir)?;
    let cfg = dir.join("repeated.toml");
    std::fs::write(&cfg, CONFIG)?;
    let out = dir.join("out");

    let code = main_with_args([
        "transmon-lru",
        "repeated-lru",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    println!("exit status {code}");
    println!("{}", std::fs::read_to_string(out.join("summary.json"))?);

    let long = Table::read(std::fs::File::open(out.join("repeated_lru.plot.csv"))?)?;
    let source = Table::read(std::fs::File::open(out.join("repeated_lru.csv"))?)?;
    println!("{} long rows; round trip exact: {}", long.rows.len(), from_long(&long)? == source);
    Ok(())
}
