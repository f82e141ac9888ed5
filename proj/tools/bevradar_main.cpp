#include <cstdio>

int main() {
    std::puts("bevradar: subcommands not wired up yet");
    return 1;
}
