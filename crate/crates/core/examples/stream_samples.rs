//! Consuming augmented samples in process, without touching the disk for output.

use std::sync::Arc;

use copypaste::pipeline::{live_streams, DataMixSpec};
use copypaste::synthetic::{write, SyntheticSpec};
use copypaste::{AugConfig, Pipeline};

fn main() -> copypaste::Result<()> {
    let input = write(&SyntheticSpec::default(), std::env::temp_dir().join("copypaste_stream"))?;
    let mut config = AugConfig::new([64, 64], DataMixSpec::supervised_only(&input.annotations, &input.images));
    config.num_samples = Some(6);
    config.workers = 2;
    let pipeline = Arc::new(Pipeline::from_config(config)?);

    let mut stream = pipeline.stream()?;
    println!("live streams: {}", live_streams());
    while let Some(rec) = stream.next_record()? {
        let anns = rec.annotation_records();
        println!(
            "#{} {} {}x{} with {} instances; first: {}",
            rec.index,
            rec.image_record.file_name,
            rec.image.width(),
            rec.image.height(),
            anns.len(),
            anns.first().map(|a| a["segmentation"].to_string()).unwrap_or_default()
        );
    }
    stream.close();
    stream.close();
    println!("live streams after close: {}", live_streams());
    Ok(())
}
