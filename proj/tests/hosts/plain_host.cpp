// Host without a line editor: echoes standard input until end of input.
// With --report it also prints what a preloaded shim detected.

#include <dlfcn.h>

#include <cstring>
#include <iostream>
#include <string>

int main(int argc, char** argv) {
    bool report = argc > 1 && std::strcmp(argv[1], "--report") == 0;
    std::string line;
    while (std::getline(std::cin, line)) std::cout << "echo: " << line << std::endl;

    if (!report) return 0;
    using state_fn = int (*)(int*, int*, int*);
    if (auto fn = reinterpret_cast<state_fn>(dlsym(RTLD_DEFAULT, "aicli_shim_state"))) {
        int detected = 0, bound = 0, init = 0;
        fn(&detected, &bound, &init);
        std::cerr << "shim: detected=" << detected << " bound=" << bound << " init=" << init << std::endl;
    }
    return 0;
}
