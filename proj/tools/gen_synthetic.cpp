// Regenerates the bundled synthetic dataset: gen_synthetic [output.csv]
#include <fstream>
#include <iostream>

#include "marketgym/market_data/csv.hpp"
#include "marketgym/market_data/synthetic.hpp"

int main(int argc, char** argv) {
  const auto frame = marketgym::market_data::synthetic_frame();
  if (argc > 1) {
    std::ofstream out(argv[1], std::ios::binary);
    if (!out) {
      std::cerr << "cannot write " << argv[1] << '\n';
      return 1;
    }
    marketgym::market_data::write_csv(out, frame);
  } else {
    marketgym::market_data::write_csv(std::cout, frame);
  }
  return 0;
}
