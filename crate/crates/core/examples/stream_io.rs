//! Reading a stream CSV with timestamps, pushing it through a sliding
//! window and reporting a malformed row.

use std::error::Error;

use depthstream::io::StreamReader;
use depthstream::window::{lag_embed, Window};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let text = "index,time,v1,v2\n0,0.0,1.0,2.0\n1,0.4,1.5,1.0\n2,1.1,0.5,0.5\n3,1.3,2.0,1.5\n";
    let mut window = Window::new(3)?;
    for obs in StreamReader::new(text.as_bytes())? {
        window.push(obs?)?;
    }
    println!("window holds {:?}, ends at {:?}", window.points(), window.end_index());

    let scalar = Window::from_scalars(&[1.0, 2.0, 4.0, 8.0])?;
    println!("lag-1 pairs {:?}", lag_embed(&scalar, 1)?.pairs);

    let broken = "index,v1\n0,1.0\n1,oops\n";
    let err = StreamReader::new(broken.as_bytes())?.collect::<Result<Vec<_>, _>>().unwrap_err();
    println!("malformed input: {err}");
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
