# 对于 io 包
