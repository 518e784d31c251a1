# 对于 tests 包
