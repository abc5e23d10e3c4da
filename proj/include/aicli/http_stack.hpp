#pragma once

// HTTP client over libcurl, loaded with dlopen on first use rather than
// linked. Hosts that never ask for help therefore never map libcurl nor run
// its global initialization (which consumes entropy and may be fatal under
// a syscall filter).

#include <dlfcn.h>

#include <atomic>
#include <cstddef>
#include <mutex>
#include <string>
#include <vector>

#include "aicli/backend.hpp"

namespace aicli::http {

struct Response {
    long status = 0;
    std::string body;
};

struct Header {
    std::string name;
    std::string value;
};

/// Blocking POST transport. Implementations must not touch the network
/// stack before initialize().
class Transport {
public:
    virtual ~Transport() = default;
    virtual backend::Result<backend::Unit> initialize() = 0;
    virtual backend::Result<Response> post(const std::string& url, const std::vector<Header>& headers,
                                           const std::string& body, long timeout_ms) = 0;
};

namespace curl {

// Stable libcurl ABI values.
inline constexpr int kOptWriteData = 10001;
inline constexpr int kOptUrl = 10002;
inline constexpr int kOptPostFields = 10015;
inline constexpr int kOptHttpHeader = 10023;
inline constexpr int kOptNoProxy = 10177;
inline constexpr int kOptWriteFunction = 20011;
inline constexpr int kOptPost = 47;
inline constexpr int kOptPostFieldSize = 60;
inline constexpr int kOptNoSignal = 99;
inline constexpr int kOptTimeoutMs = 155;
inline constexpr int kOptConnectTimeoutMs = 156;
inline constexpr int kInfoResponseCode = 0x200002;
inline constexpr int kOk = 0;
inline constexpr int kOperationTimedOut = 28;
inline constexpr long kGlobalDefault = 3;

struct Api {
    int (*global_init)(long);
    void* (*easy_init)();
    int (*easy_setopt)(void*, int, ...);
    int (*easy_perform)(void*);
    int (*easy_getinfo)(void*, int, ...);
    void (*easy_cleanup)(void*);
    const char* (*easy_strerror)(int);
    void* (*slist_append)(void*, const char*);
    void (*slist_free_all)(void*);
};

inline std::atomic<int>& init_counter() {
    static std::atomic<int> count{0};
    return count;
}

/// Number of times this process has loaded and initialized libcurl (0 or 1).
inline int init_count() { return init_counter().load(); }

/// Loads and initializes libcurl exactly once per process; the outcome,
/// success or failure, is cached.
inline backend::Result<const Api*> load() {
    static const backend::Result<const Api*> loaded = []() -> backend::Result<const Api*> {
        init_counter().fetch_add(1);
        void* lib = nullptr;
        for (const char* name : {"libcurl.so.4", "libcurl-gnutls.so.4", "libcurl.so", "libcurl.4.dylib"})
            if ((lib = dlopen(name, RTLD_NOW | RTLD_LOCAL))) break;
        if (!lib) return backend::BackendError{backend::BackendError::Kind::network, 0, "cannot load libcurl"};

        static Api api{};
        bool complete = true;
        auto bind = [&](auto& fn, const char* symbol) {
            fn = reinterpret_cast<std::remove_reference_t<decltype(fn)>>(dlsym(lib, symbol));
            complete = complete && fn != nullptr;
        };
        bind(api.global_init, "curl_global_init");
        bind(api.easy_init, "curl_easy_init");
        bind(api.easy_setopt, "curl_easy_setopt");
        bind(api.easy_perform, "curl_easy_perform");
        bind(api.easy_getinfo, "curl_easy_getinfo");
        bind(api.easy_cleanup, "curl_easy_cleanup");
        bind(api.easy_strerror, "curl_easy_strerror");
        bind(api.slist_append, "curl_slist_append");
        bind(api.slist_free_all, "curl_slist_free_all");
        if (!complete) return backend::BackendError{backend::BackendError::Kind::network, 0, "incomplete libcurl"};
        if (int rc = api.global_init(kGlobalDefault); rc != kOk)
            return backend::BackendError{backend::BackendError::Kind::network, 0, api.easy_strerror(rc)};
        return &api;
    }();
    return loaded;
}

}  // namespace curl

class CurlTransport : public Transport {
public:
    backend::Result<backend::Unit> initialize() override {
        auto api = curl::load();
        if (!api) return api.error();
        api_ = api.value();
        return backend::Unit{};
    }

    backend::Result<Response> post(const std::string& url, const std::vector<Header>& headers,
                                   const std::string& body, long timeout_ms) override {
        using backend::BackendError;
        if (!api_) {
            if (auto init = initialize(); !init) return init.error();
        }
        void* easy = api_->easy_init();
        if (!easy) return BackendError{BackendError::Kind::network, 0, "curl_easy_init failed"};

        void* header_list = nullptr;
        for (const auto& h : headers) header_list = api_->slist_append(header_list, (h.name + ": " + h.value).c_str());
        // No "Expect: 100-continue" round trip on large bodies.
        header_list = api_->slist_append(header_list, "Expect:");

        Response response;
        api_->easy_setopt(easy, curl::kOptUrl, url.c_str());
        api_->easy_setopt(easy, curl::kOptPost, 1L);
        api_->easy_setopt(easy, curl::kOptPostFields, body.c_str());
        api_->easy_setopt(easy, curl::kOptPostFieldSize, static_cast<long>(body.size()));
        api_->easy_setopt(easy, curl::kOptHttpHeader, header_list);
        api_->easy_setopt(easy, curl::kOptWriteFunction, &append_body);
        api_->easy_setopt(easy, curl::kOptWriteData, &response.body);
        api_->easy_setopt(easy, curl::kOptTimeoutMs, timeout_ms);
        api_->easy_setopt(easy, curl::kOptConnectTimeoutMs, timeout_ms);
        // The host owns signal handling.
        api_->easy_setopt(easy, curl::kOptNoSignal, 1L);
        api_->easy_setopt(easy, curl::kOptNoProxy, "localhost,127.0.0.1,::1");

        int rc = api_->easy_perform(easy);
        api_->easy_getinfo(easy, curl::kInfoResponseCode, &response.status);
        std::string reason = rc == curl::kOk ? "" : api_->easy_strerror(rc);
        api_->easy_cleanup(easy);
        api_->slist_free_all(header_list);

        if (rc == curl::kOperationTimedOut) return BackendError{BackendError::Kind::timeout, 0, reason};
        if (rc != curl::kOk) return BackendError{BackendError::Kind::network, 0, reason};
        return response;
    }

private:
    static std::size_t append_body(char* data, std::size_t size, std::size_t count, void* user) {
        static_cast<std::string*>(user)->append(data, size * count);
        return size * count;
    }

    const curl::Api* api_ = nullptr;
};

}  // namespace aicli::http
