// Test helper: idles, then touches a block of memory, holds it, and exits.
//   memhog <megabytes> <delay_ms> <hold_ms>

#include <chrono>
#include <cstdlib>
#include <cstring>
#include <thread>
#include <vector>

int main(int argc, char** argv) {
  if (argc != 4) return 2;
  const std::size_t mb = std::strtoul(argv[1], nullptr, 10);
  const int delay = std::atoi(argv[2]);
  const int hold = std::atoi(argv[3]);
  std::this_thread::sleep_for(std::chrono::milliseconds(delay));
  std::vector<char> block(mb << 20);
  std::memset(block.data(), 1, block.size());
  std::this_thread::sleep_for(std::chrono::milliseconds(hold));
  return block[block.size() / 2] == 1 ? 0 : 1;
}
