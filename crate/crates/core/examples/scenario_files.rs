//! Writes a preset out as TOML, edits it, reads it back, and shows what
//! validation reports for a broken scenario.

use storesim::harness::{config_diff, ScenarioConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("storesim-scenarios");
    std::fs::create_dir_all(&dir)?;

    let base = ScenarioConfig::preset("atv-like")?;
    let path = dir.join("atv-edited.toml");
    let text = base
        .to_toml_string()
        .replace("cashiers = 4", "cashiers = 2")
        .replace("name = \"atv-like\"", "name = \"atv-edited\"");
    std::fs::write(&path, text)?;
    let edited = ScenarioConfig::load(&path)?;
    println!("{} differs from the preset in: {:?}", path.display(), config_diff(&base, &edited));

    let mut broken = edited.clone();
    broken.probabilities.ask_help = 1.3;
    broken.population.mix.0.clear();
    broken.footfall.sunday[3] = 10.0;
    if let Err(e) = broken.validate() {
        println!("{e}");
    }
    Ok(())
}
