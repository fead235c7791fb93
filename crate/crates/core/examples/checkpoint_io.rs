//! Save a freshly initialized model with optimizer state, read it back and
//! show the header fields.

use cayley_diffusion::model::{load_checkpoint, save_checkpoint, AdamState, ModelConfig, ScoreModel};
use cayley_diffusion::GraphSpec;

fn main() -> cayley_diffusion::Result<()> {
    let spec = GraphSpec::cube2();
    let model = ScoreModel::<f32>::init(ModelConfig::for_spec(&spec).hidden(64).blocks(2), 42)?;
    let opt = AdamState::for_model(&model);
    let dir = std::env::temp_dir().join("cayley-diffusion-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("cube2.cdsm");
    save_checkpoint(&model, Some(&opt), &path)?;
    let bytes = std::fs::read(&path)?;
    println!("{} bytes, magic {:?}", bytes.len(), std::str::from_utf8(&bytes[..4]).unwrap());
    let back = load_checkpoint(&path)?;
    println!("config {:?}", back.model.config());
    println!("{} parameters, optimizer step {}", back.model.num_params(), back.optimizer.unwrap().step);
    for (name, range) in back.model.layout().tensors().iter().take(4) {
        println!("  {name}: {}", range.len());
    }
    let x = spec.scramble(&mut rand::rng(), 5);
    let f = spec.encode_features(&x)?;
    assert_eq!(model.score_forward(&f, 3)?, back.model.score_forward(&f, 3)?);
    println!("scores identical after reload");
    Ok(())
}
