# 对于 core 包
