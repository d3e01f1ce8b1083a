//! Caching lunes in memory and on disk.

use fermicorr::lattice::{fermi_ball, k_vectors_within, read_lunes_csv, LuneCache};

fn main() -> fermicorr::Result<()> {
    let dir = std::env::temp_dir().join("fermicorr-lune-cache-example");
    let k_f = 2.0;
    let ball = fermi_ball(k_f)?;
    let cache = LuneCache::with_dir(&dir);
    for k in k_vectors_within(2.0 * k_f) {
        cache.get(&ball, k)?;
    }
    println!("{} lunes cached", cache.len());
    if let Some(path) = cache.persist(k_f)? {
        let file = std::io::BufReader::new(std::fs::File::open(&path)?);
        let back = read_lunes_csv(file, k_f)?;
        println!("wrote {} and read back {} lunes", path.display(), back.len());
    }
    Ok(())
}
