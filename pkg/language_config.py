# 语言配置文件
# Language Configuration File
#
# 支持的语言代码 / Supported Language Codes:
# - 'en'    : English (英文)
# - 'zh-tw' : Traditional Chinese (繁体中文)
# - 'zh-cn' : Simplified Chinese (简体中文)
#
# 实验报告 (heatbath 命令行) 使用此设置
# Used by the heatbath command line for run and report messages.
# HEATBATH_LANG and --lang take precedence over this file.

LANGUAGE = 'en'  # 默认英文 / Default English

# 示例 / Examples:
# LANGUAGE = 'zh-cn'  # 简体中文
# LANGUAGE = 'zh-tw'  # 繁体中文
