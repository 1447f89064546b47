a = u"unicode"
b = R"raw\d"
c = Rb"\x00"
d = F"{a}"
e = rf"{b}\n"
f = '''single 'quoted' triple'''
g = "esc \" quote"
h = f'{a}' f'{b!s}' "{c}"
i = f"{a:{b}{c}}"
j = f"{3.14:.1f}{a!a}"
