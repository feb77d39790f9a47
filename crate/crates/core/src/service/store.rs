use std::collections::HashMap;
use std::sync::Arc;
use std::time::SystemTime;

use crate::image::GrayImage16;

#[derive(Debug)]
pub struct SessionImage {
    pub id: String,
    pub original: Arc<GrayImage16>,
    pub uploaded_at: SystemTime,
}

#[derive(Debug)]
struct Slot {
    image: Arc<SessionImage>,
    mask_png: Option<Arc<Vec<u8>>>,
    last_used: u64,
}

/// In-memory image store evicting the least recently used entry.
#[derive(Debug)]
pub struct ImageStore {
    capacity: usize,
    clock: u64,
    next_id: u64,
    slots: HashMap<String, Slot>,
}

impl ImageStore {
    pub fn new(capacity: usize) -> Self {
        Self { capacity: capacity.max(1), clock: 0, next_id: 0, slots: HashMap::new() }
    }

    fn tick(&mut self) -> u64 {
        self.clock += 1;
        self.clock
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn insert(&mut self, image: GrayImage16) -> Arc<SessionImage> {
        while self.slots.len() >= self.capacity {
            let oldest = self.slots.iter().min_by_key(|(_, s)| s.last_used).map(|(k, _)| k.clone());
            match oldest {
                Some(k) => self.slots.remove(&k),
                None => break,
            };
        }
        self.next_id += 1;
        let id = format!("img-{:08x}", self.next_id);
        let image = Arc::new(SessionImage { id: id.clone(), original: Arc::new(image), uploaded_at: SystemTime::now() });
        let last_used = self.tick();
        self.slots.insert(id, Slot { image: image.clone(), mask_png: None, last_used });
        image
    }

    pub fn get(&mut self, id: &str) -> Option<Arc<SessionImage>> {
        let now = self.tick();
        self.slots.get_mut(id).map(|s| {
            s.last_used = now;
            s.image.clone()
        })
    }

    /// Stores a result unless the image was evicted or replaced meanwhile.
    pub fn set_mask(&mut self, image: &Arc<SessionImage>, png: Vec<u8>) -> bool {
        match self.slots.get_mut(&image.id) {
            Some(s) if Arc::ptr_eq(&s.image, image) => {
                s.mask_png = Some(Arc::new(png));
                true
            }
            _ => false,
        }
    }

    pub fn mask(&mut self, id: &str) -> Option<Arc<Vec<u8>>> {
        let now = self.tick();
        let slot = self.slots.get_mut(id)?;
        slot.last_used = now;
        slot.mask_png.clone()
    }
}
