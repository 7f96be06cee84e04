#include "freqdisc/perturbation.hpp"

#include <vector>

namespace freqdisc {

MemoryBank::MemoryBank(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw Error("MemoryBank: capacity must be positive");
}

void MemoryBank::push(BankEntry entry) {
  entry.insert_seq = next_seq_++;
  entries_.push_back(std::move(entry));
  while (entries_.size() > capacity_) entries_.pop_front();
}

std::optional<DonorChoice> select_style_donor(const MemoryBank& bank, int class_k, double eta,
                                              Rng& rng, bool require_donor_confidence) {
  if (bank.empty()) return std::nullopt;
  const auto& entries = bank.entries();
  std::vector<std::size_t> gated;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    if (e.pseudo_label == class_k && (!require_donor_confidence || e.confidence > eta)) {
      gated.push_back(i);
    }
  }
  if (!gated.empty()) return DonorChoice{&entries[gated[uniform_index(rng, gated.size())]], true};
  return DonorChoice{&entries[uniform_index(rng, entries.size())], false};
}

CdfpResult cdfp(const ImageTensor& known_image, PseudoLabel known_pseudo, const MemoryBank& bank,
                const CdfpOptions& options, Rng& rng) {
  if (bank.empty()) return {known_image, false, false, 0, -1};
  std::optional<DonorChoice> donor;
  if (options.class_aware && known_pseudo.confidence > options.eta) {
    donor = select_style_donor(bank, known_pseudo.label, options.eta, rng, options.gate_both);
  } else {
    donor = DonorChoice{&bank.entries()[uniform_index(rng, bank.size())], false};
  }
  const BankEntry& d = *donor->entry;
  if (!d.image.same_shape(known_image)) throw Error("cdfp: donor/receiver shape mismatch");
  CdfpResult r;
  r.image = swap_low_freq(fft2(d.image), fft2(known_image), options.window);
  r.perturbed = true;
  r.class_matched = donor->class_matched;
  r.donor_seq = d.insert_seq;
  r.donor_label = d.pseudo_label;
  return r;
}

IdfpResult idfp(const ImageTensor& image, const AugmentationSpec& spec_a,
                const AugmentationSpec& spec_b, FreqWindow window, Rng& rng) {
  IdfpResult r;
  r.view_a = spec_a.apply(image, rng);
  r.view_b = spec_b.apply(image, rng);
  r.a_into_b = uniform01(rng) < 0.5;
  const Spectrum fa = fft2(r.view_a);
  const Spectrum fb = fft2(r.view_b);
  r.perturbed = r.a_into_b ? swap_low_freq(fa, fb, window) : swap_low_freq(fb, fa, window);
  return r;
}

}  // namespace freqdisc
